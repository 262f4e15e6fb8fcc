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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "csqpt/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherent-state process tomography of heralded photon addition and subtraction"};
  app.require_subcommand(1);

  std::string config_path, out, data_dir, tensor_path, mode, expected_hash;
  bool no_herald_norm = false, force = false;
  int workers = 0;

  auto* sim = app.add_subcommand("simulate", "Simulate homodyne datasets for every probe amplitude");
  sim->add_option("--config", config_path, "Run description file")->required();
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--workers", workers, "Worker threads (0: all cores)");

  auto* rec = app.add_subcommand("reconstruct", "Reconstruct the process tensor from datasets");
  rec->add_option("--data", data_dir, "Dataset directory")->required();
  rec->add_option("--config", config_path, "Run description file")->required();
  rec->add_option("--out", out, "Output tensor file")->required();
  rec->add_flag("--no-herald-norm", no_herald_norm, "Give every probe herald weight 1");
  rec->add_option("--workers", workers, "Worker threads (0: all cores)");

  auto* ana = app.add_subcommand("analyze", "Write analysis reports for a tensor file");
  ana->add_option("--tensor", tensor_path, "Process tensor file")->required();
  ana->add_option("--mode", mode, "diag | fidelity | rates | wigner")->required();
  ana->add_option("--out", out, "Output directory")->required();
  ana->add_option("--config", config_path, "Check the tensor provenance against this configuration");
  ana->add_flag("--force", force, "Proceed despite failed hash checks");

  auto* cal = app.add_subcommand("calibrate", "Recover probe amplitudes from trigger-free records");
  cal->add_option("--data", data_dir, "Dataset directory")->required();
  cal->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) {
      csqpt::RunConfig cfg = csqpt::load_config(config_path);
      auto res = csqpt::run_simulate(cfg, out, workers);
      std::cout << "wrote " << res.dataset_files.size() << " datasets and " << res.rates_file.string() << '\n';
    } else if (*rec) {
      csqpt::RunConfig cfg = csqpt::load_config(config_path);
      auto res = csqpt::run_reconstruct(data_dir, cfg, out, {!no_herald_norm, workers});
      const auto& d = res.diagnostics;
      std::cout << "wrote " << out << " (converged=" << (d.converged ? "true" : "false")
                << ", iterations=" << d.iterations << ", log_likelihood="
                << csqpt::format_sig9(d.log_likelihood.back()) << ")\n";
      if (!d.converged) std::cerr << "warning: reconstruction did not converge\n";
    } else if (*ana) {
      const csqpt::AnalyzeMode m = csqpt::parse_analyze_mode(mode);
      csqpt::AnalyzeOptions opts;
      opts.force = force;
      if (!config_path.empty()) opts.expected_config_hash = csqpt::load_config(config_path).hash();
      auto files = csqpt::run_analyze(tensor_path, m, out, opts);
      for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
    } else if (*cal) {
      auto res = csqpt::run_calibrate(data_dir, out);
      std::cout << "wrote " << out << " (slope=" << csqpt::format_sig9(res.slope)
                << ", intercept=" << csqpt::format_sig9(res.intercept) << ")\n";
    }
  } catch (const csqpt::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const csqpt::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
