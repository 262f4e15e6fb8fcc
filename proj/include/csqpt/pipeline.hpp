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

// File-based commands: simulate -> reconstruct -> analyze, plus calibrate.

#ifndef CSQPT_PIPELINE_HPP_
#define CSQPT_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "csqpt/analysis.hpp"
#include "csqpt/config.hpp"
#include "csqpt/dataset.hpp"
#include "csqpt/errors.hpp"
#include "csqpt/homodyne.hpp"
#include "csqpt/parallel.hpp"
#include "csqpt/process_sim.hpp"
#include "csqpt/tensor_io.hpp"
#include "csqpt/tomography.hpp"

namespace csqpt {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ofstream open_output(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  return os;
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

inline std::string probe_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "probe_%02zu.csv", i);
  return buf;
}

// Dataset files in a directory: *.csv whose first line is the format header,
// in lexicographic order.
inline std::vector<fs::path> dataset_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    std::ifstream is(e.path());
    std::string first;
    std::getline(is, first);
    if (trim(first) == "# format=csqpt-quadrature-v1") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no quadrature datasets in '" + dir.string() + "'");
  return files;
}

}  // namespace detail

struct SimulateResult {
  std::vector<fs::path> dataset_files;
  fs::path rates_file;
  fs::path config_file;
  std::vector<long long> heralded;
};

// One dataset per probe amplitude, a rates summary and a canonical copy of the
// configuration. Output is a pure function of the configuration.
inline SimulateResult run_simulate(const RunConfig& cfg, const fs::path& out_dir, int workers = 0) {
  cfg.validate();
  detail::ensure_directory(out_dir);
  const std::string chash = cfg.hash();
  std::vector<QuadratureDataset> data(cfg.amplitudes.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    data[i] = simulate_probe_run(cfg.probe_settings(cfg.amplitudes[i]));
    data[i].metadata.set("config_hash", chash);
  });

  SimulateResult res;
  auto rates = detail::open_output(out_dir / "rates.csv");
  rates << "# config_hash=" << chash << "\nalpha_in,alpha_box,heralded,total\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    fs::path p = out_dir / detail::probe_file_name(i);
    save_dataset(p.string(), data[i]);
    res.dataset_files.push_back(p);
    const auto& md = data[i].metadata;
    res.heralded.push_back(md.get_int("heralded_slots"));
    rates << md.get("alpha_in") << ',' << md.get("alpha_box") << ',' << md.get("heralded_slots") << ','
          << md.get("total_slots") << '\n';
  }
  if (!rates) throw std::runtime_error("failed writing rates summary");
  res.rates_file = out_dir / "rates.csv";
  res.config_file = out_dir / "config.txt";
  auto cf = detail::open_output(res.config_file);
  cf << "# config_hash=" << chash << '\n' << cfg.canonical();
  return res;
}

struct ReconstructOptions {
  bool herald_normalization = true;
  int workers = 0;
};

struct ReconstructResult {
  ProcessTensor tensor{1, 1};
  MLEDiagnostics diagnostics;
  std::vector<HeraldFactor> factors;
  nlohmann::json provenance;
};

// Reconstruction from in-memory datasets, with the creation-box displacement
// correction applied per probe.
inline ReconstructResult reconstruct_datasets(std::vector<QuadratureDataset> data, const RunConfig& cfg,
                                              const ReconstructOptions& opts = {}) {
  if (data.empty()) throw UndefinedQuantity("reconstruct: no datasets");
  const ImperfectionModel model = cfg.model();
  for (auto& d : data) {
    validate_dataset(d);
    if (cfg.kind == BoxKind::creation) {
      const double alpha_in = d.metadata.contains("alpha_in") ? d.metadata.get_double("alpha_in")
                                                              : (d.samples.empty() ? 0.0 : d.samples.front().alpha_in);
      d = displacement_correct(d, model.displacement_x(alpha_in));
    }
  }
  MLEConfig mc = cfg.mle_config();
  mc.herald_normalization = opts.herald_normalization;
  mc.workers = opts.workers;

  ProcessEstimate est = estimate_process(data, mc);
  ReconstructResult res;
  res.tensor = std::move(est.tensor);
  res.diagnostics = std::move(est.diagnostics);
  res.factors = std::move(est.herald);
  const std::vector<double>& f = est.factors;

  nlohmann::json rates = nlohmann::json::array();
  for (std::size_t i = 0; i < res.factors.size(); ++i) {
    const auto& h = res.factors[i];
    rates.push_back({{"alpha_in", round_sig9(h.alpha_in)},
                     {"alpha_box", round_sig9(h.alpha_box)},
                     {"heralded", h.heralded},
                     {"total", h.total},
                     {"factor", round_sig9(f[i])}});
  }
  const auto& dg = res.diagnostics;
  res.provenance = {{"config_hash", cfg.hash()},
                    {"kind", to_string(cfg.kind)},
                    {"eta", round_sig9(mc.eta)},
                    {"n_max", mc.n_max},
                    {"padding", mc.padding},
                    {"herald_normalization", mc.herald_normalization},
                    {"phase_covariant", mc.phase_covariant},
                    {"displacement_corrected", cfg.kind == BoxKind::creation},
                    {"converged", dg.converged},
                    {"iterations", dg.iterations},
                    {"log_likelihood", round_sig9(dg.log_likelihood.back())},
                    {"max_tp_error", round_sig9(dg.max_tp_error)},
                    {"min_eigenvalue", round_sig9(dg.min_eigenvalue)},
                    {"diluted_steps", dg.diluted_steps},
                    {"clipped_events", dg.clipped_events},
                    {"rates", rates}};
  return res;
}

inline ReconstructResult run_reconstruct(const fs::path& data_dir, const RunConfig& cfg, const fs::path& out_file,
                                         const ReconstructOptions& opts = {}) {
  std::vector<QuadratureDataset> data;
  nlohmann::json hashes = nlohmann::json::array();
  for (const auto& p : detail::dataset_files(data_dir)) {
    data.push_back(load_dataset(p.string()));
    hashes.push_back({{"file", p.filename().string()}, {"sha256", sha256_hex(read_file_bytes(p.string()))}});
  }
  ReconstructResult res = reconstruct_datasets(std::move(data), cfg, opts);
  res.provenance["datasets"] = hashes;
  if (out_file.has_parent_path()) detail::ensure_directory(out_file.parent_path());
  save_tensor(out_file.string(), res.tensor, res.provenance);
  return res;
}

enum class AnalyzeMode { diag, fidelity, rates, wigner };

inline AnalyzeMode parse_analyze_mode(const std::string& s) {
  if (s == "diag") return AnalyzeMode::diag;
  if (s == "fidelity") return AnalyzeMode::fidelity;
  if (s == "rates") return AnalyzeMode::rates;
  if (s == "wigner") return AnalyzeMode::wigner;
  throw UsageError("unknown analyze mode '" + s + "' (expected diag|fidelity|rates|wigner)");
}

struct AnalyzeOptions {
  std::string expected_config_hash;  // empty: not checked
  bool force = false;                // accept a failed content or config hash check
  std::vector<double> wigner_alphas = {0.0, 0.5, 1.0};
  WignerGrid grid;
  std::uint64_t seed = 1;
};

inline std::vector<fs::path> run_analyze(const fs::path& tensor_file, AnalyzeMode mode, const fs::path& out_dir,
                                         const AnalyzeOptions& opts = {}) {
  TensorFile tf = load_tensor(tensor_file.string(), !opts.force);
  const auto& prov = tf.provenance;
  if (!opts.force && !opts.expected_config_hash.empty() &&
      prov.value("config_hash", "") != opts.expected_config_hash)
    throw IntegrityError("tensor provenance config hash does not match the given configuration");
  const BoxKind kind = parse_box_kind(prov.value("kind", "annihilation"));
  const std::string prefix = prov.value("content_hash", sha256_hex(read_file_bytes(tensor_file.string()))).substr(0, 12);
  const std::string chash = prov.value("config_hash", "");
  detail::ensure_directory(out_dir);
  std::vector<fs::path> written;
  auto open = [&](const std::string& name) {
    fs::path p = out_dir / (prefix + "_" + name);
    written.push_back(p);
    auto os = detail::open_output(p);
    os << "# config_hash=" << chash << '\n';
    return os;
  };
  const ProcessTensor& t = tf.tensor;

  switch (mode) {
    case AnalyzeMode::diag: {
      RMatrix d = diagonal_elements(t);
      auto os = open("diag.csv");
      os << "m,k,value\n";
      for (int m = 0; m < d.rows(); ++m)
        for (int k = 0; k < d.cols(); ++k) os << m << ',' << k << ',' << format_sig9(d(m, k)) << '\n';
      auto sm = open("diag_summary.csv");
      sm << "m,row_sum,target_k,target_fraction\n";
      for (int m = 0; m < d.rows(); ++m)
        sm << m << ',' << format_sig9(d.row(m).sum()) << ',' << ideal_target_index(kind, m) << ','
           << format_sig9(target_mass_fraction(d, kind, m)) << '\n';
      break;
    }
    case AnalyzeMode::fidelity: {
      const int n_max = kind == BoxKind::annihilation ? std::min(t.dim_in() - 1, t.dim_out())
                                                      : std::min(t.dim_in(), t.dim_out() - 1);
      auto curve = worst_case_fidelity_curve(t, kind, n_max, opts.seed);
      auto os = open("fidelity.csv");
      os << "n,worst_fidelity,evaluations,skipped_candidates\n";
      for (const auto& r : curve)
        os << r.n << ',' << format_sig9(r.worst_fidelity) << ',' << r.evaluations << ','
           << r.skipped_candidates << '\n';
      break;
    }
    case AnalyzeMode::rates: {
      if (!prov.contains("rates")) throw FormatError("tensor provenance carries no herald rates");
      std::vector<RatePoint> pts;
      for (const auto& r : prov.at("rates"))
        pts.push_back({r.at("alpha_box").get<double>(), r.at("heralded").get<long long>(), r.at("total").get<long long>()});
      CountRateFit fit = fit_count_rates(pts, kind);
      auto os = open("rates.csv");
      os << "kind,scale,quadratic_coefficient,chi2,dof,p_value\n"
         << to_string(kind) << ',' << format_sig9(fit.scale) << ',' << format_sig9(fit.quadratic_coefficient) << ','
         << format_sig9(fit.residual) << ',' << fit.dof << ',' << format_sig9(fit.p_value) << '\n';
      break;
    }
    case AnalyzeMode::wigner: {
      auto fields = wigner_report(t, opts.wigner_alphas, opts.grid);
      const auto xs = opts.grid.xs(), ps = opts.grid.ps();
      auto sm = open("wigner_summary.csv");
      sm << "alpha,herald_trace,min_w,min_x,min_p,integral,note\n";
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& f = fields[i];
        sm << format_sig9(f.alpha) << ',' << format_sig9(f.herald_trace) << ',';
        if (f.skipped) {
          sm << ",,,," << f.note << '\n';
          continue;
        }
        sm << format_sig9(f.min_value) << ',' << format_sig9(f.min_x) << ',' << format_sig9(f.min_p) << ','
           << format_sig9(f.integral) << ",\n";
        auto os = open("wigner_alpha" + format_sig9(f.alpha) + ".csv");
        os << "x,p,w\n";
        for (std::size_t a = 0; a < xs.size(); ++a)
          for (std::size_t b = 0; b < ps.size(); ++b)
            os << format_sig9(xs[a]) << ',' << format_sig9(ps[b]) << ',' << format_sig9(f.field(a, b)) << '\n';
      }
      break;
    }
  }
  return written;
}

struct CalibrationRow {
  std::string file;
  double nominal = 0.0;
  double recovered = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
};

// Probe amplitudes from trigger-free records: the fitted amplitude divided by
// sqrt(t1) recovers the nominal alpha_in.
inline CalibrationResult calibrate_datasets(const std::vector<std::pair<std::string, QuadratureDataset>>& data) {
  CalibrationResult res;
  for (const auto& [name, d] : data) {
    const std::size_t idle = d.samples.size() - d.heralded_count();
    if (idle == 0) throw UndefinedQuantity(name + ": no unheralded records to calibrate from");
    const double t1 = d.metadata.get_double_or("t1", 1.0);
    AmplitudeEstimate est = estimate_amplitude(d, false);
    CalibrationRow row;
    row.file = name;
    row.nominal = d.metadata.contains("alpha_in") ? d.metadata.get_double("alpha_in") : d.samples.front().alpha_in;
    row.recovered = est.amplitude / std::sqrt(t1);
    row.stderr_ = est.amplitude_stderr / std::sqrt(t1);
    row.samples = est.samples_used;
    res.rows.push_back(row);
  }
  const double n = static_cast<double>(res.rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : res.rows) {
    sx += r.nominal;
    sy += r.recovered;
    sxx += r.nominal * r.nominal;
    sxy += r.nominal * r.recovered;
  }
  const double den = n * sxx - sx * sx;
  if (den > 0.0) {
    res.slope = (n * sxy - sx * sy) / den;
    res.intercept = (sy - res.slope * sx) / n;
  } else {
    res.slope = std::numeric_limits<double>::quiet_NaN();
    res.intercept = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

inline CalibrationResult run_calibrate(const fs::path& data_dir, const fs::path& out_file) {
  std::vector<std::pair<std::string, QuadratureDataset>> data;
  for (const auto& p : detail::dataset_files(data_dir))
    data.emplace_back(p.filename().string(), load_dataset(p.string()));
  CalibrationResult res = calibrate_datasets(data);
  if (out_file.has_parent_path()) detail::ensure_directory(out_file.parent_path());
  auto os = detail::open_output(out_file);
  os << "# slope=" << format_sig9(res.slope) << "\n# intercept=" << format_sig9(res.intercept) << '\n';
  os << "file,nominal_alpha_in,recovered_alpha_in,stderr,samples\n";
  for (const auto& r : res.rows)
    os << r.file << ',' << format_sig9(r.nominal) << ',' << format_sig9(r.recovered) << ','
       << format_sig9(r.stderr_) << ',' << r.samples << '\n';
  return res;
}

}  // namespace csqpt

#endif  // CSQPT_PIPELINE_HPP_
