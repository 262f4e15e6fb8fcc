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

// Run description: a flat `key = value` text file, `#` starts a comment.
//
//   kind              annihilation | creation            (annihilation)
//   zeta              interaction strength, > 0          (0.05)
//   t1, t2            transmissions in [0, 1]            (1, 1)
//   amplitudes        comma list of probe alpha_in >= 0  (12 values, 0..1.7)
//   phase_count       LO phases, uniform in [0, pi)      (12)
//   samples_per_phase slots recorded per (alpha, theta)  (10000)
//   seed              unsigned integer                   (1)
//   n_max             reconstruction cutoff              (7)
//   padding           extra Fock levels during the fit   (4)
//   eta               POVM efficiency, or "auto"         (auto: t1, or t1*t2 for creation)
//   herald_scale      click probability per first-order herald probability (20)
//   sim_dim           simulation Fock cutoff             (20)
//   bin_width         quadrature bin width               (0.05)
//   max_iterations    MLE iteration cap                  (2000)
//   tolerance         MLE relative stall tolerance       (1e-9)
//   phase_covariant   true | false                       (true)
//   output_dir        optional default output directory
//
// The canonical form lists every key but output_dir in sorted order with
// normalized values; its SHA-256 is the config hash.

#ifndef CSQPT_CONFIG_HPP_
#define CSQPT_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csqpt/dataset.hpp"
#include "csqpt/errors.hpp"
#include "csqpt/process_sim.hpp"
#include "csqpt/tensor_io.hpp"
#include "csqpt/tomography.hpp"

namespace csqpt {

inline std::vector<double> default_amplitudes() {
  std::vector<double> a(12);
  for (int i = 0; i < 12; ++i) a[i] = round_sig9(1.7 * i / 11.0);
  return a;
}

struct RunConfig {
  BoxKind kind = BoxKind::annihilation;
  double zeta = 0.05;
  double t1 = 1.0;
  double t2 = 1.0;
  std::vector<double> amplitudes = default_amplitudes();
  int phase_count = 12;
  long long samples_per_phase = 10000;
  std::uint64_t seed = 1;
  int n_max = 7;
  int padding = 4;
  std::optional<double> eta;  // nullopt: derived from t1/t2
  double herald_scale = 20.0;
  int sim_dim = 20;
  double bin_width = 0.05;
  int max_iterations = 2000;
  double tolerance = 1e-9;
  bool phase_covariant = true;
  std::string output_dir;

  double effective_eta() const {
    if (eta) return *eta;
    return kind == BoxKind::creation ? t1 * t2 : t1;
  }

  ImperfectionModel model() const { return {t1, t2, kind}; }

  MLEConfig mle_config() const {
    MLEConfig c;
    c.n_max = n_max;
    c.padding = padding;
    c.max_iterations = max_iterations;
    c.tolerance = tolerance;
    c.eta = effective_eta();
    c.bin_width = bin_width;
    c.phase_covariant = phase_covariant;
    return c;
  }

  ProbeRunSettings probe_settings(double alpha_in) const {
    ProbeRunSettings s;
    s.alpha_in = alpha_in;
    s.kind = kind;
    s.model = model();
    s.zeta = InteractionStrength(zeta);
    s.phases = uniform_phases(phase_count);
    s.samples_per_phase = static_cast<std::size_t>(samples_per_phase);
    s.seed = seed;
    s.herald_scale = herald_scale;
    s.sim_dim = sim_dim;
    return s;
  }

  void validate() const {
    auto require = [](bool ok, const std::string& msg) {
      if (!ok) throw DomainError("config: " + msg);
    };
    require(zeta > 0.0, "zeta must be > 0");
    require(t1 > 0.0 && t1 <= 1.0, "t1 must lie in (0, 1]");
    require(t2 > 0.0 && t2 <= 1.0, "t2 must lie in (0, 1]");
    require(!amplitudes.empty(), "amplitudes must be non-empty");
    for (double a : amplitudes) require(a >= 0.0 && a * a <= sim_dim / 4.0, "amplitude out of range");
    require(phase_count >= 1, "phase_count must be >= 1");
    require(samples_per_phase >= 1, "samples_per_phase must be >= 1");
    require(n_max >= 1 && n_max <= 30, "n_max must lie in [1, 30]");
    require(!eta || (*eta > 0.0 && *eta <= 1.0), "eta must lie in (0, 1]");
    require(herald_scale > 0.0, "herald_scale must be > 0");
    require(padding >= 0 && padding <= 16, "padding must lie in [0, 16]");
    require(sim_dim >= n_max + 2, "sim_dim must exceed n_max + 1");
    require(bin_width > 0.0, "bin_width must be > 0");
    require(max_iterations >= 1, "max_iterations must be >= 1");
    require(tolerance >= 0.0, "tolerance must be >= 0");
  }

  std::string canonical() const {
    std::map<std::string, std::string> kv;
    kv["kind"] = to_string(kind);
    kv["zeta"] = format_sig9(zeta);
    kv["t1"] = format_sig9(t1);
    kv["t2"] = format_sig9(t2);
    kv["amplitudes"] = format_list(amplitudes);
    kv["phase_count"] = std::to_string(phase_count);
    kv["samples_per_phase"] = std::to_string(samples_per_phase);
    kv["seed"] = std::to_string(seed);
    kv["n_max"] = std::to_string(n_max);
    kv["padding"] = std::to_string(padding);
    kv["eta"] = eta ? format_sig9(*eta) : "auto";
    kv["herald_scale"] = format_sig9(herald_scale);
    kv["sim_dim"] = std::to_string(sim_dim);
    kv["bin_width"] = format_sig9(bin_width);
    kv["max_iterations"] = std::to_string(max_iterations);
    kv["tolerance"] = format_sig9(tolerance);
    kv["phase_covariant"] = phase_covariant ? "true" : "false";
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
  }

  std::string hash() const { return sha256_hex(canonical()); }
};

namespace detail {

inline long long parse_int(const std::string& s, long line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw FormatError("invalid integer '" + s + "'", line);
  }
  if (pos != s.size()) throw FormatError("invalid integer '" + s + "'", line);
  return v;
}

inline bool parse_bool(const std::string& s, long line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw FormatError("invalid boolean '" + s + "'", line);
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
  RunConfig c;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("expected key = value", lineno);
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string val = trim(std::string_view(t).substr(eq + 1));
    try {
      if (key == "kind") c.kind = parse_box_kind(val);
      else if (key == "zeta") c.zeta = parse_double(val, lineno);
      else if (key == "t1") c.t1 = parse_double(val, lineno);
      else if (key == "t2") c.t2 = parse_double(val, lineno);
      else if (key == "amplitudes") {
        c.amplitudes = parse_list(val, lineno);
        for (auto& a : c.amplitudes) a = round_sig9(a);
      }
      else if (key == "phase_count") c.phase_count = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "samples_per_phase") c.samples_per_phase = detail::parse_int(val, lineno);
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(detail::parse_int(val, lineno));
      else if (key == "padding") c.padding = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "n_max") c.n_max = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "eta") c.eta = val == "auto" ? std::nullopt : std::optional<double>(parse_double(val, lineno));
      else if (key == "herald_scale") c.herald_scale = parse_double(val, lineno);
      else if (key == "sim_dim") c.sim_dim = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "bin_width") c.bin_width = parse_double(val, lineno);
      else if (key == "max_iterations") c.max_iterations = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "tolerance") c.tolerance = parse_double(val, lineno);
      else if (key == "phase_covariant") c.phase_covariant = detail::parse_bool(val, lineno);
      else if (key == "output_dir") c.output_dir = val;
      else throw FormatError("unknown config key '" + key + "'", lineno);
    } catch (const DomainError& e) {
      throw FormatError(e.what(), lineno);
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  try {
    return parse_config(is);
  } catch (const FormatError& e) {
    throw e.with_prefix(path + ": ");
  }
}

}  // namespace csqpt

#endif  // CSQPT_CONFIG_HPP_
