// Copyright 2026 The csqpt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tagged homodyne samples and their on-disk text format.
//
// File layout: a block of `# key=value` metadata lines followed by one record
// per line, `alpha_in,theta,x,heralded`, heralded written as 0/1. Floating
// point values carry 9 significant digits.

#ifndef CSQPT_DATASET_HPP_
#define CSQPT_DATASET_HPP_

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "csqpt/errors.hpp"

namespace csqpt {

inline std::string format_sig9(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Round-trips through the 9-significant-digit text representation so
// in-memory data matches what a reader recovers from disk.
inline double round_sig9(double v) { return std::strtod(format_sig9(v).c_str(), nullptr); }

inline std::string format_list(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_sig9(values[i]);
  }
  return s;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view s, long line = -1) {
  std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  // Underflow still yields a usable (subnormal or zero) value.
  if (ec == std::errc::result_out_of_range && ptr == t.data() + t.size()) {
    v = std::strtod(t.c_str(), nullptr);
    if (std::abs(v) < 1.0) return v;
  }
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
    throw FormatError("invalid number '" + t + "'", line);
  return v;
}

inline std::vector<double> parse_list(std::string_view s, long line = -1) {
  std::vector<double> out;
  std::string t = trim(s);
  if (t.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    auto comma = t.find(',', pos);
    out.push_back(parse_double(std::string_view(t).substr(pos, comma - pos), line));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct QuadratureSample {
  double alpha_in = 0.0;
  double theta = 0.0;  // local-oscillator phase, [0, pi)
  double x = 0.0;      // quadrature value, vacuum variance 1/2
  bool heralded = false;

  bool operator==(const QuadratureSample&) const = default;
};

class Metadata {
 public:
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void set(const std::string& key, double value) { kv_[key] = format_sig9(value); }
  void set(const std::string& key, long long value) { kv_[key] = std::to_string(value); }
  void set(const std::string& key, int value) { kv_[key] = std::to_string(value); }

  bool contains(const std::string& key) const { return kv_.count(key) != 0; }
  const std::string& get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw FormatError("missing metadata key '" + key + "'");
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  double get_double(const std::string& key) const { return parse_double(get(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    return contains(key) ? get_double(key) : fallback;
  }
  long long get_int(const std::string& key) const {
    const std::string& s = get(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw FormatError("metadata key '" + key + "' is not an integer");
    return v;
  }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  bool operator==(const Metadata&) const = default;

 private:
  std::map<std::string, std::string> kv_;
};

struct QuadratureDataset {
  std::vector<QuadratureSample> samples;
  Metadata metadata;

  std::size_t heralded_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.heralded;
    return n;
  }
};

inline void write_dataset(std::ostream& os, const QuadratureDataset& data) {
  os << "# format=csqpt-quadrature-v1\n";
  for (const auto& [k, v] : data.metadata.entries()) {
    if (k == "format" || k == "columns") continue;
    os << "# " << k << '=' << v << '\n';
  }
  os << "# columns=alpha_in,theta,x,heralded\n";
  for (const auto& s : data.samples)
    os << format_sig9(s.alpha_in) << ',' << format_sig9(s.theta) << ',' << format_sig9(s.x) << ','
       << (s.heralded ? 1 : 0) << '\n';
}

inline QuadratureDataset read_dataset(std::istream& is) {
  QuadratureDataset data;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      std::string key = trim(std::string_view(t).substr(1, eq - 1));
      data.metadata.set(key, trim(std::string_view(t).substr(eq + 1)));
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view sv(t);
    std::size_t pos = 0;
    while (true) {
      auto c = sv.find(',', pos);
      fields.push_back(sv.substr(pos, c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (fields.size() != 4) throw FormatError("expected 4 comma-separated fields", lineno);
    QuadratureSample s;
    s.alpha_in = parse_double(fields[0], lineno);
    s.theta = parse_double(fields[1], lineno);
    s.x = parse_double(fields[2], lineno);
    std::string h = trim(fields[3]);
    if (h == "1")
      s.heralded = true;
    else if (h == "0")
      s.heralded = false;
    else
      throw FormatError("heralded flag must be 0 or 1", lineno);
    data.samples.push_back(s);
  }
  if (data.metadata.get_or("format", "") != "csqpt-quadrature-v1")
    throw FormatError("not a quadrature dataset (missing format header)");
  return data;
}

inline void save_dataset(const std::string& path, const QuadratureDataset& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dataset(os, data);
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

inline QuadratureDataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return read_dataset(is);
  } catch (const FormatError& e) {
    throw e.with_prefix(path + ": ");
  }
}

// Checks per-phase sample counts and herald tallies against the metadata.
inline void validate_dataset(const QuadratureDataset& data) {
  const auto& md = data.metadata;
  if (md.contains("total_slots") && static_cast<long long>(data.samples.size()) != md.get_int("total_slots"))
    throw IntegrityError("dataset: sample count does not match total_slots");
  if (md.contains("heralded_slots") &&
      static_cast<long long>(data.heralded_count()) != md.get_int("heralded_slots"))
    throw IntegrityError("dataset: heralded count does not match heralded_slots");
  if (md.contains("phases") && md.contains("samples_per_phase")) {
    auto phases = parse_list(md.get("phases"));
    long long per = md.get_int("samples_per_phase");
    std::map<double, long long> counts;
    for (const auto& s : data.samples) counts[s.theta]++;
    for (double th : phases)
      if (counts[th] != per) throw IntegrityError("dataset: per-phase count mismatch");
    if (counts.size() != phases.size()) throw IntegrityError("dataset: unexpected phase values");
  }
}

}  // namespace csqpt

#endif  // CSQPT_DATASET_HPP_
