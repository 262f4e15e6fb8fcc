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

#include <cmath>
#include <random>
#include <vector>

#include "csqpt/analysis.hpp"
#include "oracles.hpp"

using namespace csqpt;

namespace {

// Ideal annihilation followed by loss: a physical, imperfect process whose
// worst-case fidelity genuinely depends on the input.
ProcessTensor lossy_annihilation(int d, double eta) {
  ProcessTensor ideal = ideal_process_tensor(BoxKind::annihilation, d);
  ProcessTensor t(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) {
      CMatrix block(d, d);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) block(j, k) = ideal(m, n, j, k);
      CMatrix lossy = loss_channel_matrix(block, eta);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) t(m, n, j, k) = lossy(j, k);
    }
  return t;
}

FidelitySearchOptions quick() {
  FidelitySearchOptions o;
  o.restarts = 8;
  return o;
}

}  // namespace

TEST(Diagonal, IdealTensorsHaveOneEntryPerRow) {
  const int d = 8;
  RMatrix a = diagonal_elements(ideal_process_tensor(BoxKind::annihilation, d));
  RMatrix c = diagonal_elements(ideal_process_tensor(BoxKind::creation, d));
  for (int m = 0; m < d; ++m)
    for (int k = 0; k < d; ++k) {
      EXPECT_EQ(a(m, k), k == m - 1 ? static_cast<double>(m) : 0.0);
      EXPECT_EQ(c(m, k), k == m + 1 ? m + 1.0 : 0.0);
    }
  for (int m = 1; m < d; ++m) EXPECT_EQ(target_mass_fraction(a, BoxKind::annihilation, m), 1.0);
  EXPECT_EQ(target_mass_fraction(a, BoxKind::annihilation, 0), 0.0);
  EXPECT_EQ(target_mass_fraction(c, BoxKind::creation, d - 1), 0.0);
}

TEST(Diagonal, ZeroTensorAndImaginaryDiagonal) {
  ProcessTensor t(4, 4);
  EXPECT_EQ(diagonal_elements(t).cwiseAbs().maxCoeff(), 0.0);
  t(1, 1, 0, 0) = Complex(0.5, 1e-3);
  EXPECT_THROW(diagonal_elements(t), IntegrityError);
}

TEST(WorstCaseFidelity, IdealProcessIsExact) {
  for (BoxKind kind : {BoxKind::annihilation, BoxKind::creation}) {
    ProcessTensor t = ideal_process_tensor(kind, 8);
    auto curve = worst_case_fidelity_curve(t, kind, 7, 3, quick());
    ASSERT_EQ(curve.size(), 7u);
    for (const auto& r : curve) EXPECT_NEAR(r.worst_fidelity, 1.0, 1e-6) << r.n;
  }
}

TEST(WorstCaseFidelity, SingleStateSubspace) {
  ProcessTensor t = lossy_annihilation(6, 0.8);
  auto rep = worst_case_fidelity(t, BoxKind::annihilation, 1, 1);
  CVector one = CVector::Zero(6);
  one(1) = 1.0;
  EXPECT_DOUBLE_EQ(rep.worst_fidelity, *output_fidelity(t, BoxKind::annihilation, one));
  // Loss cannot touch a vacuum output.
  EXPECT_NEAR(rep.worst_fidelity, 1.0, 1e-12);
}

TEST(WorstCaseFidelity, MonotoneAndConsistentWithArgmin) {
  ProcessTensor t = lossy_annihilation(7, 0.8);
  auto curve = worst_case_fidelity_curve(t, BoxKind::annihilation, 5, 9, quick());
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LE(curve[i].worst_fidelity, curve[i - 1].worst_fidelity);
  EXPECT_LT(curve.back().worst_fidelity, 0.9);
  for (const auto& r : curve) {
    auto f = output_fidelity(t, BoxKind::annihilation, r.argmin_state.amplitudes());
    ASSERT_TRUE(f.has_value());
    EXPECT_NEAR(*f, r.worst_fidelity, 1e-12);
  }
}

TEST(WorstCaseFidelity, NeverAboveRandomSweep) {
  ProcessTensor t = lossy_annihilation(6, 0.7);
  std::mt19937_64 rng(4);
  for (int n = 2; n <= 4; ++n) {
    auto rep = worst_case_fidelity(t, BoxKind::annihilation, n, 17, std::nullopt, quick());
    double sweep = 1.0;
    for (int i = 0; i < 5000; ++i) {
      CVector psi = CVector::Zero(6);
      psi.segment(1, n) = oracle::random_pure(n, rng);
      sweep = std::min(sweep, *output_fidelity(t, BoxKind::annihilation, psi));
    }
    EXPECT_LE(rep.worst_fidelity, sweep + 1e-6) << n;
  }
}

TEST(WorstCaseFidelity, SkipsCandidatesWithoutOutput) {
  // Only |1> survives: every superposition outside it has no normalized target.
  ProcessTensor t(4, 4);
  t(1, 1, 0, 0) = 1.0;
  auto rep = worst_case_fidelity(t, BoxKind::annihilation, 2, 5, std::nullopt, quick());
  EXPECT_NEAR(rep.worst_fidelity, 0.0, 1e-6);
  ProcessTensor zero(4, 4);
  EXPECT_THROW(worst_case_fidelity(zero, BoxKind::annihilation, 1, 1), UndefinedQuantity);
  EXPECT_THROW(worst_case_fidelity(zero, BoxKind::annihilation, 4, 1), DomainError);
  EXPECT_THROW(worst_case_fidelity(zero, BoxKind::creation, 0, 1), DomainError);
}

TEST(StateParametrization, AnglesRoundTrip) {
  std::mt19937_64 rng(2);
  const std::vector<int> basis{1, 2, 3, 4};
  for (int i = 0; i < 20; ++i) {
    CVector psi = CVector::Zero(6);
    psi.segment(1, 4) = oracle::random_pure(4, rng);
    psi *= std::conj(psi(1)) / std::abs(psi(1));
    auto p = detail::angles_from_state(psi, basis);
    CVector back = detail::state_from_angles(p.data(), basis, 6);
    EXPECT_LT((back - psi).norm(), 1e-12);
  }
}

TEST(CountRates, ExactCreationRates) {
  std::vector<RatePoint> pts;
  for (double a : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const long long total = 1000000;
    pts.push_back({a, std::llround(0.01 * (1 + a * a) * total), total});
  }
  CountRateFit fit = fit_count_rates(pts, BoxKind::creation);
  EXPECT_NEAR(fit.quadratic_coefficient, 1.0, 1e-12);
  EXPECT_NEAR(fit.scale, 0.01, 1e-14);
  EXPECT_NEAR(fit.residual, 0.0, 1e-12);
  EXPECT_EQ(fit.dof, 3);
  EXPECT_NEAR(fit.p_value, 1.0, 1e-9);
}

TEST(CountRates, ExactAnnihilationRates) {
  std::vector<RatePoint> pts;
  for (double a : {0.0, 0.5, 1.0, 1.5, 2.0}) pts.push_back({a, std::llround(0.01 * a * a * 1000000), 1000000});
  CountRateFit fit = fit_count_rates(pts, BoxKind::annihilation);
  EXPECT_NEAR(fit.scale, 0.01, 1e-14);
  EXPECT_EQ(fit.quadratic_coefficient, 1.0);
  EXPECT_NEAR(fit.residual, 0.0, 1e-12);
  // A single click at zero amplitude is incompatible with the alpha^2 form.
  pts.front().count = 1;
  EXPECT_EQ(fit_count_rates(pts, BoxKind::annihilation).p_value, 0.0);
}

TEST(CountRates, Errors) {
  std::vector<RatePoint> same{{1.0, 5, 100}, {1.0, 6, 100}, {1.0, 4, 100}};
  EXPECT_THROW(fit_count_rates(same, BoxKind::creation), UndefinedQuantity);
  std::vector<RatePoint> empty{{0.0, 0, 0}, {1.0, 1, 10}, {2.0, 2, 10}};
  EXPECT_THROW(fit_count_rates(empty, BoxKind::annihilation), UndefinedQuantity);
}

TEST(WignerReport, PhotonAddedVacuumIsSinglePhoton) {
  WignerGrid grid;
  auto fields = wigner_report(ideal_process_tensor(BoxKind::creation, 8), {0.0, 0.5, 1.0}, grid);
  ASSERT_EQ(fields.size(), 3u);
  EXPECT_NEAR(fields[0].min_value, -1.0 / oracle::kPi, 1e-12);
  EXPECT_NEAR(fields[0].min_x, 0.0, 1e-12);
  EXPECT_NEAR(fields[0].min_p, 0.0, 1e-12);
  for (const auto& f : fields) {
    EXPECT_FALSE(f.skipped);
    EXPECT_LT(f.min_value, 0.0) << f.alpha;
  }
  // The default window clips about 1e-3 of the alpha = 1 field; a window that
  // holds the whole state checks the renormalization itself.
  WignerGrid wide{-7.0, 7.0, 281, -7.0, 7.0, 281};
  for (const auto& f : wigner_report(ideal_process_tensor(BoxKind::creation, 8), {0.0, 0.5, 1.0}, wide))
    EXPECT_NEAR(f.integral, 1.0, 1e-4) << f.alpha;
}

TEST(WignerReport, AnnihilatedCoherentStateStaysPositive) {
  WignerGrid grid;
  auto fields = wigner_report(ideal_process_tensor(BoxKind::annihilation, 20), {0.8, 0.0}, grid);
  EXPECT_GT(fields[0].min_value, -1e-12);
  EXPECT_NEAR(fields[0].integral, 1.0, 1e-4);
  // The oracle integral agrees at the maximum, which sits at sqrt(2) * 0.8 on x.
  DensityMatrix rho = DensityMatrix::from_pure(coherent_state(0.8, 20));
  EXPECT_NEAR(wigner_at(rho, std::sqrt(2.0) * 0.8, 0.0), oracle::wigner_integral(rho.matrix(), std::sqrt(2.0) * 0.8, 0.0),
              1e-6);
  EXPECT_TRUE(fields[1].skipped);
  EXPECT_EQ(fields[1].herald_trace, 0.0);
}

TEST(ProcessFidelity, IdealReferences) {
  const int d = 8;
  EXPECT_NEAR(process_fidelity_to_ideal(ideal_process_tensor(BoxKind::annihilation, d), BoxKind::annihilation), 1.0,
              1e-9);
  EXPECT_LT(process_fidelity_to_ideal(ideal_process_tensor(BoxKind::annihilation, d), BoxKind::creation), 0.5);
  EXPECT_EQ(process_fidelity_to_ideal(ProcessTensor(d, d), BoxKind::creation), 0.0);
  EXPECT_THROW(process_fidelity_to_ideal(ProcessTensor(3, 4), BoxKind::creation), InvalidDimension);
}
