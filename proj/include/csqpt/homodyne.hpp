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

// Balanced-homodyne statistics: quadrature marginals, grid inverse-CDF
// sampling, loss-corrected quadrature POVM elements, displacement removal and
// coherent-amplitude calibration.

#ifndef CSQPT_HOMODYNE_HPP_
#define CSQPT_HOMODYNE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "csqpt/dataset.hpp"
#include "csqpt/fock.hpp"

namespace csqpt {

// Elements rho_mn e^{i(n-m) theta}: the state seen by an LO at phase theta.
inline CMatrix rotate_to_lo_frame(const CMatrix& rho, double theta) {
  const auto dim = rho.rows();
  CMatrix out(dim, dim);
  for (Eigen::Index m = 0; m < dim; ++m)
    for (Eigen::Index n = 0; n < dim; ++n)
      out(m, n) = rho(m, n) * std::polar(1.0, static_cast<double>(n - m) * theta);
  return out;
}

// pr(x|theta) = sum_mn rho_mn e^{i(n-m)theta} psi_m(x) psi_n(x)
inline double quadrature_pdf(const DensityMatrix& rho, double theta, double x) {
  RVector psi = quadrature_wavefunctions(rho.dim(), x);
  RMatrix re = rotate_to_lo_frame(rho.matrix(), theta).real();
  return psi.dot(re * psi);
}

// Same marginal evaluated over a list of points, sharing the rotated matrix.
inline std::vector<double> quadrature_pdf(const DensityMatrix& rho, double theta,
                                          std::span<const double> xs) {
  RMatrix re = rotate_to_lo_frame(rho.matrix(), theta).real();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    RVector psi = quadrature_wavefunctions(rho.dim(), xs[i]);
    out[i] = psi.dot(re * psi);
  }
  return out;
}

// Half-width of the sampling grid for a state living in `dim` Fock levels.
inline double sampling_half_width(int dim) { return std::sqrt(2.0 * dim) + 4.0; }

// Deterministic uniform variate in [0, 1) from a 64-bit engine; avoids the
// implementation-defined std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Engine seeded from the run seed plus a list of real-valued setting tags.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<double> tags) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (double t : tags) {
    std::uint64_t bits;
    std::memcpy(&bits, &t, sizeof bits);
    words.push_back(static_cast<std::uint32_t>(bits));
    words.push_back(static_cast<std::uint32_t>(bits >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// Inverse-CDF sampler over a uniform knot grid on [-x_max, x_max], linear in
// x between knots.
class QuadratureSampler {
 public:
  QuadratureSampler(const DensityMatrix& rho, double theta, double x_max, double max_step = 1e-3) {
    const int intervals = static_cast<int>(std::ceil(2.0 * x_max / max_step));
    knots_.resize(intervals + 1);
    for (int i = 0; i <= intervals; ++i) knots_[i] = -x_max + (2.0 * x_max * i) / intervals;
    std::vector<double> pdf = quadrature_pdf(rho, theta, knots_);
    cdf_.assign(knots_.size(), 0.0);
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      double a = std::max(pdf[i - 1], 0.0), b = std::max(pdf[i], 0.0);
      cdf_[i] = cdf_[i - 1] + 0.5 * (a + b) * (knots_[i] - knots_[i - 1]);
    }
    if (cdf_.back() <= 0.0) throw UndefinedQuantity("QuadratureSampler: state has no weight on grid");
  }

  double inverse_cdf(double u) const {
    double target = u * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    if (it == cdf_.begin()) return knots_.front();
    if (it == cdf_.end()) return knots_.back();
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    double c0 = cdf_[i - 1], c1 = cdf_[i];
    double f = (c1 > c0) ? (target - c0) / (c1 - c0) : 0.0;
    return knots_[i - 1] + f * (knots_[i] - knots_[i - 1]);
  }

  double sample(std::mt19937_64& rng) const { return inverse_cdf(uniform01(rng)); }

  // Normalized piecewise-linear CDF of the grid model.
  double cdf(double x) const {
    if (x <= knots_.front()) return 0.0;
    if (x >= knots_.back()) return 1.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    double f = (x - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
    return (cdf_[i - 1] + f * (cdf_[i] - cdf_[i - 1])) / cdf_.back();
  }

  double grid_mass() const { return cdf_.back(); }

 private:
  std::vector<double> knots_;
  std::vector<double> cdf_;
};

inline std::vector<double> sample_quadratures(const DensityMatrix& rho, double theta, std::size_t n,
                                              std::uint64_t seed) {
  std::vector<double> out;
  if (n == 0) return out;
  QuadratureSampler sampler(rho, theta, sampling_half_width(rho.dim()));
  auto rng = make_stream(seed, {theta});
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.sample(rng));
  return out;
}

// Ideal projector |x_theta><x_theta| in the Fock basis:
// elements psi_m(x) psi_n(x) e^{i(m-n) theta}.
inline CMatrix quadrature_projector(double x, double theta, int dim) {
  RVector psi = quadrature_wavefunctions(dim, x);
  CMatrix out(dim, dim);
  for (int m = 0; m < dim; ++m)
    for (int n = 0; n < dim; ++n)
      out(m, n) = psi(m) * psi(n) * std::polar(1.0, static_cast<double>(m - n) * theta);
  return out;
}

// Loss-corrected POVM density: the adjoint loss map applied to the ideal
// quadrature projector, so tr[rho * povm] = pr(x|theta) of loss(rho, eta).
inline FockOperator efficiency_povm(double x, double theta, double eta, int dim) {
  if (!(eta > 0.0)) throw UndefinedQuantity("efficiency_povm: eta = 0 gives a degenerate POVM");
  if (eta > 1.0) throw DomainError("efficiency_povm: eta must lie in (0, 1]");
  return FockOperator(loss_adjoint_matrix(quadrature_projector(x, theta, dim), eta));
}

// Subtracts delta_x * cos(theta) from every sample. Applying twice shifts twice.
inline QuadratureDataset displacement_correct(const QuadratureDataset& data, double delta_x) {
  if (!std::isfinite(delta_x)) throw DomainError("displacement_correct: non-finite shift");
  QuadratureDataset out = data;
  if (delta_x == 0.0) return out;
  for (auto& s : out.samples) s.x = round_sig9(s.x - delta_x * std::cos(s.theta));
  double prior = data.metadata.get_double_or("displacement_correction", 0.0);
  out.metadata.set("displacement_correction", prior + delta_x);
  return out;
}

struct AmplitudeEstimate {
  double amplitude = 0.0;
  double phase = 0.0;
  // Mean squared residual of the per-phase means about the fitted cosine.
  double residual_variance = 0.0;
  // Standard error of the amplitude from the per-phase sample variances.
  double amplitude_stderr = 0.0;
  int phase_count = 0;
  std::size_t samples_used = 0;
};

// Fits per-phase means to sqrt(2) A cos(theta - phi). `heralded` selects a
// subset of samples; nullopt uses all of them.
inline AmplitudeEstimate estimate_amplitude(const QuadratureDataset& data,
                                            std::optional<bool> heralded = std::nullopt) {
  struct Acc {
    double sum = 0, sum2 = 0;
    long long n = 0;
  };
  std::map<double, Acc> per_phase;
  for (const auto& s : data.samples) {
    if (heralded && s.heralded != *heralded) continue;
    auto& a = per_phase[s.theta];
    a.sum += s.x;
    a.sum2 += s.x * s.x;
    a.n++;
  }
  if (per_phase.size() < 3)
    throw UndefinedQuantity("estimate_amplitude: fewer than 3 distinct phases (underdetermined fit)");

  Eigen::MatrixXd design(per_phase.size(), 2);
  Eigen::VectorXd means(per_phase.size());
  Eigen::VectorXd var_of_mean(per_phase.size());
  AmplitudeEstimate est;
  int row = 0;
  for (const auto& [theta, a] : per_phase) {
    design(row, 0) = std::cos(theta);
    design(row, 1) = std::sin(theta);
    double mean = a.sum / a.n;
    means(row) = mean;
    double var = a.n > 1 ? (a.sum2 - a.n * mean * mean) / (a.n - 1) : 0.0;
    var_of_mean(row) = var / a.n;
    est.samples_used += a.n;
    ++row;
  }
  Eigen::Vector2d coef = design.colPivHouseholderQr().solve(means);
  Eigen::VectorXd resid = means - design * coef;
  est.amplitude = coef.norm() / std::sqrt(2.0);
  est.phase = std::atan2(coef(1), coef(0));
  est.residual_variance = resid.squaredNorm() / static_cast<double>(per_phase.size());
  est.phase_count = static_cast<int>(per_phase.size());

  // Propagate per-phase mean variances through the linear fit.
  Eigen::Matrix2d pinv_cov = Eigen::Matrix2d::Zero();
  Eigen::MatrixXd h = (design.transpose() * design).inverse() * design.transpose();
  for (int i = 0; i < h.cols(); ++i) pinv_cov += var_of_mean(i) * h.col(i) * h.col(i).transpose();
  if (coef.norm() > 0) {
    Eigen::Vector2d grad = coef / coef.norm() / std::sqrt(2.0);
    est.amplitude_stderr = std::sqrt(std::max(0.0, grad.dot(pinv_cov * grad)));
  } else {
    est.amplitude_stderr = std::sqrt(pinv_cov.trace() / 2.0);
  }
  return est;
}

}  // namespace csqpt

#endif  // CSQPT_HOMODYNE_HPP_
