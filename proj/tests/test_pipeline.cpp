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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "csqpt/pipeline.hpp"

using namespace csqpt;

namespace {

const char* kSmallConfig = R"(# small run for the tests
kind = annihilation
amplitudes = 0, 0.5, 1.0, 1.5
phase_count = 4
samples_per_phase = 2000
seed = 3
n_max = 2
padding = 2
max_iterations = 300
)";

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("csqpt_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) { return read_file_bytes(p.string()); }

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CSQPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  RunConfig c = parse(kSmallConfig);
  EXPECT_EQ(c.kind, BoxKind::annihilation);
  EXPECT_EQ(c.amplitudes, (std::vector<double>{0, 0.5, 1.0, 1.5}));
  EXPECT_EQ(c.n_max, 2);
  EXPECT_EQ(c.padding, 2);
  EXPECT_DOUBLE_EQ(c.effective_eta(), 1.0);
  RunConfig cr = parse("kind = creation\nt1 = 0.75\nt2 = 0.79\n");
  EXPECT_NEAR(cr.effective_eta(), 0.5925, 1e-15);
  EXPECT_EQ(parse("eta = 0.9\n").effective_eta(), 0.9);
}

TEST(Config, DefaultsMatchTheReferenceRun) {
  RunConfig c = parse("");
  EXPECT_EQ(c.amplitudes.size(), 12u);
  EXPECT_EQ(c.amplitudes.front(), 0.0);
  EXPECT_EQ(c.amplitudes.back(), 1.7);
  EXPECT_EQ(c.phase_count, 12);
  EXPECT_EQ(c.samples_per_phase, 10000);
  EXPECT_EQ(c.n_max, 7);
  EXPECT_EQ(c.zeta, 0.05);
}

TEST(Config, HashIsCanonical) {
  RunConfig a = parse("zeta = 0.05\nkind = annihilation\n");
  RunConfig b = parse("  kind=annihilation   # same run\n\nzeta = 5e-2\noutput_dir = /elsewhere\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 64u);
  EXPECT_NE(a.hash(), parse("seed = 2\n").hash());
}

TEST(Config, Errors) {
  try {
    parse("kind = creation\nfoo = 1\n");
    FAIL() << "unknown key accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse("n_max = seven\n"), FormatError);
  EXPECT_THROW(parse("kind = both\n"), FormatError);
  EXPECT_THROW(parse("just words\n"), FormatError);
  EXPECT_THROW(parse("t1 = 1.5\n"), DomainError);
  EXPECT_THROW(parse("zeta = 0\n"), DomainError);
  EXPECT_THROW(parse("amplitudes = 0, 9\n"), DomainError);
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), std::runtime_error);
}

TEST_F(Scratch, SimulateWritesOneFilePerProbe) {
  RunConfig c = parse(kSmallConfig);
  auto res = run_simulate(c, dir_ / "data");
  ASSERT_EQ(res.dataset_files.size(), 4u);
  EXPECT_EQ(detail::dataset_files(dir_ / "data").size(), 4u);
  EXPECT_TRUE(fs::exists(res.rates_file));
  EXPECT_TRUE(fs::exists(res.config_file));
  EXPECT_EQ(res.heralded.front(), 0);
  QuadratureDataset first = load_dataset(res.dataset_files.front().string());
  EXPECT_EQ(first.heralded_count(), 0u);
  EXPECT_EQ(first.samples.size(), 4u * 2000u);
  EXPECT_EQ(first.metadata.get("config_hash"), c.hash());
  auto rl = lines(res.rates_file);
  ASSERT_EQ(rl.size(), 6u);
  EXPECT_EQ(rl[0], "# config_hash=" + c.hash());
}

TEST_F(Scratch, SimulateIsByteReproducible) {
  RunConfig c = parse(kSmallConfig);
  auto a = run_simulate(c, dir_ / "a", 1);
  auto b = run_simulate(c, dir_ / "b", 0);
  for (std::size_t i = 0; i < a.dataset_files.size(); ++i)
    EXPECT_EQ(slurp(a.dataset_files[i]), slurp(b.dataset_files[i])) << i;
  EXPECT_EQ(slurp(a.rates_file), slurp(b.rates_file));
}

TEST_F(Scratch, ReconstructAndAnalyze) {
  RunConfig c = parse(kSmallConfig);
  run_simulate(c, dir_ / "data");
  auto r1 = run_reconstruct(dir_ / "data", c, dir_ / "t1.json");
  auto r2 = run_reconstruct(dir_ / "data", c, dir_ / "t2.json", {true, 1});
  // Full pipeline determinism: same config, same tensor file.
  EXPECT_EQ(sha256_hex(slurp(dir_ / "t1.json")), sha256_hex(slurp(dir_ / "t2.json")));
  EXPECT_EQ(r1.provenance["config_hash"], c.hash());
  EXPECT_EQ(r1.provenance["datasets"].size(), 4u);
  const auto& ll = r1.diagnostics.log_likelihood;
  for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1]);

  AnalyzeOptions opts;
  opts.expected_config_hash = c.hash();
  auto diag = run_analyze(dir_ / "t1.json", AnalyzeMode::diag, dir_ / "rep", opts);
  ASSERT_EQ(diag.size(), 2u);
  EXPECT_EQ(lines(diag[1]).size(), 2u + 3u);
  auto fid = run_analyze(dir_ / "t1.json", AnalyzeMode::fidelity, dir_ / "rep", opts);
  EXPECT_EQ(lines(fid[0]).size(), 2u + 2u);  // hash, header, n = 1..n_max
  auto rates = run_analyze(dir_ / "t1.json", AnalyzeMode::rates, dir_ / "rep", opts);
  EXPECT_EQ(lines(rates[0]).size(), 3u);
  for (const auto& p : diag) EXPECT_EQ(lines(p)[0], "# config_hash=" + c.hash());

  opts.expected_config_hash = parse("seed = 99\n").hash();
  EXPECT_THROW(run_analyze(dir_ / "t1.json", AnalyzeMode::diag, dir_ / "rep", opts), IntegrityError);
  opts.force = true;
  EXPECT_NO_THROW(run_analyze(dir_ / "t1.json", AnalyzeMode::diag, dir_ / "rep", opts));
}

TEST_F(Scratch, TamperedTensorIsRefused) {
  ProcessTensor t = ideal_process_tensor(BoxKind::creation, 3);
  save_tensor((dir_ / "t.json").string(), t, {{"kind", "creation"}, {"config_hash", "x"}});
  std::string text = slurp(dir_ / "t.json");
  auto pos = text.find("1.41421356");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "1.41421357");
  std::ofstream(dir_ / "t.json") << text;
  EXPECT_THROW(run_analyze(dir_ / "t.json", AnalyzeMode::diag, dir_ / "rep"), IntegrityError);
  AnalyzeOptions force;
  force.force = true;
  EXPECT_NO_THROW(run_analyze(dir_ / "t.json", AnalyzeMode::diag, dir_ / "rep", force));
}

TEST_F(Scratch, DiagOfIdealCreationTensor) {
  const int d = 8;
  save_tensor((dir_ / "t.json").string(), ideal_process_tensor(BoxKind::creation, d), {{"kind", "creation"}});
  auto files = run_analyze(dir_ / "t.json", AnalyzeMode::diag, dir_ / "rep");
  auto rows = lines(files[0]);
  ASSERT_EQ(rows.size(), 2u + d * d);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    int m = 0, k = 0;
    double v = 0;
    ASSERT_EQ(std::sscanf(rows[i].c_str(), "%d,%d,%lf", &m, &k, &v), 3);
    EXPECT_EQ(v, (k == m + 1 && k < d) ? m + 1.0 : 0.0) << rows[i];
  }
}

TEST_F(Scratch, WignerModeShowsNegativity) {
  save_tensor((dir_ / "t.json").string(), ideal_process_tensor(BoxKind::creation, 8), {{"kind", "creation"}});
  AnalyzeOptions opts;
  opts.wigner_alphas = {0.0};
  opts.grid.nx = opts.grid.np = 41;
  auto files = run_analyze(dir_ / "t.json", AnalyzeMode::wigner, dir_ / "rep", opts);
  ASSERT_EQ(files.size(), 2u);
  auto summary = lines(files[0]);
  double alpha = 0, trace = 0, min_w = 0;
  ASSERT_EQ(std::sscanf(summary[2].c_str(), "%lf,%lf,%lf", &alpha, &trace, &min_w), 3);
  EXPECT_NEAR(min_w, -0.318309886, 1e-9);
  EXPECT_EQ(lines(files[1]).size(), 2u + 41u * 41u);
}

TEST_F(Scratch, UnknownModeAndEmptyDirectory) {
  EXPECT_THROW(parse_analyze_mode("histogram"), UsageError);
  fs::create_directories(dir_ / "empty");
  write("empty/notes.csv", "alpha,theta\n");
  EXPECT_THROW(detail::dataset_files(dir_ / "empty"), std::runtime_error);
  EXPECT_THROW(run_reconstruct(dir_ / "empty", RunConfig{}, dir_ / "t.json"), std::runtime_error);
  EXPECT_THROW(run_calibrate(dir_ / "missing", dir_ / "cal.csv"), std::runtime_error);
}

TEST_F(Scratch, MalformedDatasetReportsLine) {
  RunConfig c = parse(kSmallConfig);
  auto res = run_simulate(c, dir_ / "data");
  std::string text = slurp(res.dataset_files[1]);
  text += "0.5,0.1,notanumber,1\n";
  std::ofstream(res.dataset_files[1]) << text;
  try {
    run_reconstruct(dir_ / "data", c, dir_ / "t.json");
    FAIL() << "malformed line accepted";
  } catch (const FormatError& e) {
    EXPECT_GT(e.line(), 0);
  }
}

TEST_F(Scratch, CalibrationRecoversProbeAmplitudes) {
  RunConfig c = parse(kSmallConfig);
  c.t1 = 0.75;
  c.amplitudes = {0.0, 0.6, 1.2, 1.7};
  run_simulate(c, dir_ / "data");
  auto res = run_calibrate(dir_ / "data", dir_ / "cal.csv");
  ASSERT_EQ(res.rows.size(), 4u);
  EXPECT_NEAR(res.rows[0].recovered, 0.0, 4 * res.rows[0].stderr_ + 1e-3);
  for (const auto& r : res.rows) EXPECT_NEAR(r.recovered, r.nominal, 0.03) << r.file;
  EXPECT_NEAR(res.slope, 1.0, 0.03);
  auto out = lines(dir_ / "cal.csv");
  ASSERT_EQ(out.size(), 3u + 4u);
  EXPECT_EQ(out[2], "file,nominal_alpha_in,recovered_alpha_in,stderr,samples");
}

TEST_F(Scratch, CalibrationNeedsUnheraldedRecords) {
  QuadratureDataset d;
  d.metadata.set("alpha_in", 1.0);
  d.samples.push_back({1.0, 0.0, 0.3, true});
  EXPECT_THROW(calibrate_datasets({{"all_heralded.csv", d}}), UndefinedQuantity);
}

TEST_F(Scratch, CommandLineExitCodes) {
  fs::path cfg = write("run.cfg", kSmallConfig);
  EXPECT_EQ(run_cli("simulate --config " + cfg.string() + " --out " + (dir_ / "data").string()), 0);
  EXPECT_EQ(detail::dataset_files(dir_ / "data").size(), 4u);
  EXPECT_EQ(run_cli("reconstruct --data " + (dir_ / "data").string() + " --config " + cfg.string() + " --out " +
                    (dir_ / "t.json").string() + " --workers 1"),
            0);
  EXPECT_EQ(run_cli("analyze --tensor " + (dir_ / "t.json").string() + " --mode diag --out " +
                    (dir_ / "rep").string() + " --config " + cfg.string()),
            0);
  EXPECT_EQ(run_cli("analyze --tensor " + (dir_ / "t.json").string() + " --mode bogus --out " +
                    (dir_ / "rep").string()),
            2);
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(run_cli("reconstruct --data " + (dir_ / "empty").string() + " --config " + cfg.string() + " --out " +
                    (dir_ / "x.json").string()),
            1);
  fs::path bad = write("bad.cfg", "n_max = 7\nwhat = 1\n");
  EXPECT_EQ(run_cli("simulate --config " + bad.string() + " --out " + (dir_ / "d2").string()), 1);
  EXPECT_NE(run_cli("simulate --out " + (dir_ / "d3").string()), 0);
}
