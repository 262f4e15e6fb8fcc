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

// Truncated Fock-space linear algebra for a single bosonic mode.
//
// Conventions used throughout the library:
//   X = (a + a^dag)/sqrt(2),  P = i(a^dag - a)/sqrt(2),  vacuum variance 1/2,
//   X_theta = X cos(theta) + P sin(theta),
//   phase-space point (x, p) <-> alpha = (x + i p)/sqrt(2),
//   Wigner functions normalized so that the integral over dx dp equals tr(rho).

#ifndef CSQPT_FOCK_HPP_
#define CSQPT_FOCK_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "csqpt/errors.hpp"

namespace csqpt {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

// Discarded coherent-state weight above which a truncation warning is raised.
inline constexpr double kTruncationWarning = 1e-4;

class PureState {
 public:
  explicit PureState(CVector amplitudes, double discarded_weight = 0.0)
      : amplitudes_(std::move(amplitudes)), discarded_weight_(discarded_weight) {
    if (amplitudes_.size() < 1) throw InvalidDimension("PureState: empty amplitude vector");
  }

  static PureState basis(int n, int dim) {
    if (n < 0 || n >= dim) throw InvalidDimension("PureState::basis: index outside cutoff");
    CVector v = CVector::Zero(dim);
    v(n) = 1.0;
    return PureState(std::move(v));
  }

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  const CVector& amplitudes() const { return amplitudes_; }
  Complex operator[](int n) const { return amplitudes_(n); }
  double norm_squared() const { return amplitudes_.squaredNorm(); }

  // Probability mass dropped when a state of unbounded support was truncated.
  double discarded_weight() const { return discarded_weight_; }
  bool truncation_warning() const { return discarded_weight_ > kTruncationWarning; }

  PureState normalized() const {
    double n = amplitudes_.norm();
    if (n <= 0.0) throw UndefinedQuantity("PureState::normalized: zero vector");
    return PureState(amplitudes_ / n, discarded_weight_);
  }

 private:
  CVector amplitudes_;
  double discarded_weight_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix elements) : elements_(std::move(elements)) {
    if (elements_.rows() != elements_.cols() || elements_.rows() < 1)
      throw InvalidDimension("DensityMatrix: elements must be a non-empty square matrix");
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
  }
  static DensityMatrix fock(int n, int dim) { return from_pure(PureState::basis(n, dim)); }
  static DensityMatrix zero(int dim) { return DensityMatrix(CMatrix::Zero(dim, dim)); }

  int dim() const { return static_cast<int>(elements_.rows()); }
  const CMatrix& matrix() const { return elements_; }
  Complex operator()(int m, int n) const { return elements_(m, n); }
  double trace() const { return elements_.trace().real(); }

  DensityMatrix normalized() const {
    double t = trace();
    if (t <= 1e-12) throw UndefinedQuantity("DensityMatrix::normalized: trace vanishes");
    return DensityMatrix(elements_ / t);
  }

  // Top-left block for dim <= this->dim(); zero-padded embedding otherwise.
  DensityMatrix resized(int dim) const {
    CMatrix out = CMatrix::Zero(dim, dim);
    int k = std::min(dim, this->dim());
    out.topLeftCorner(k, k) = elements_.topLeftCorner(k, k);
    return DensityMatrix(std::move(out));
  }

  double hermiticity_error() const {
    return (elements_ - elements_.adjoint()).cwiseAbs().maxCoeff();
  }
  double min_eigenvalue() const {
    CMatrix h = 0.5 * (elements_ + elements_.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  bool is_valid(double herm_tol = 1e-10, double psd_tol = 1e-9) const {
    return hermiticity_error() <= herm_tol && min_eigenvalue() >= -psd_tol && trace() > 0.0 &&
           trace() <= 1.0 + psd_tol;
  }

 private:
  CMatrix elements_;
};

class FockOperator {
 public:
  explicit FockOperator(CMatrix elements) : elements_(std::move(elements)) {
    if (elements_.rows() != elements_.cols() || elements_.rows() < 1)
      throw InvalidDimension("FockOperator: elements must be a non-empty square matrix");
  }
  int dim() const { return static_cast<int>(elements_.rows()); }
  const CMatrix& matrix() const { return elements_; }
  Complex operator()(int m, int n) const { return elements_(m, n); }

  PureState apply(const PureState& psi) const {
    if (psi.dim() != dim()) throw InvalidDimension("FockOperator::apply: dimension mismatch");
    return PureState(elements_ * psi.amplitudes());
  }
  // O rho O^dag
  DensityMatrix conjugate(const DensityMatrix& rho) const {
    if (rho.dim() != dim()) throw InvalidDimension("FockOperator::conjugate: dimension mismatch");
    return DensityMatrix(elements_ * rho.matrix() * elements_.adjoint());
  }
  FockOperator adjoint() const { return FockOperator(elements_.adjoint()); }

 private:
  CMatrix elements_;
};

inline FockOperator annihilation_matrix(int dim) {
  if (dim < 2) throw InvalidDimension("annihilation_matrix: dim must be >= 2");
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int m = 1; m < dim; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  return FockOperator(std::move(a));
}

inline FockOperator creation_matrix(int dim) {
  if (dim < 2) throw InvalidDimension("creation_matrix: dim must be >= 2");
  return FockOperator(annihilation_matrix(dim).matrix().adjoint());
}

inline FockOperator number_matrix(int dim) {
  CMatrix n = CMatrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) n(m, m) = static_cast<double>(m);
  return FockOperator(std::move(n));
}

// |alpha> truncated to `dim` levels and renormalized; the dropped Poisson
// weight is kept as metadata.
inline PureState coherent_state(Complex alpha, int dim) {
  if (dim < 1) throw InvalidDimension("coherent_state: dim must be >= 1");
  CVector c(dim);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  double kept = c.squaredNorm();
  double discarded = std::max(0.0, 1.0 - kept);
  return PureState(c / std::sqrt(kept), discarded);
}

inline double expectation(const FockOperator& op, const DensityMatrix& rho) {
  return (op.matrix() * rho.matrix()).trace().real();
}

namespace detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// sqrt(C(n,k) eta^(n-k) (1-eta)^k): the <n-k|A_k|n> Kraus element of the
// pure-loss channel.
inline double loss_amplitude(int n, int k, double eta) {
  if (k > n) return 0.0;
  double log_binom = log_factorial(n) - log_factorial(k) - log_factorial(n - k);
  double pe = (n - k == 0) ? 1.0 : std::pow(eta, n - k);
  double pl = (k == 0) ? 1.0 : std::pow(1.0 - eta, k);
  return std::sqrt(std::exp(log_binom) * pe * pl);
}

inline void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("loss transmissivity must lie in [0, 1]");
}

}  // namespace detail

// Kraus operators A_k = sum_n sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k><n| of a
// beam splitter with transmissivity eta whose reflected port is traced out.
inline std::vector<CMatrix> loss_kraus(double eta, int dim) {
  detail::check_eta(eta);
  std::vector<CMatrix> ops;
  for (int k = 0; k < dim; ++k) {
    CMatrix a = CMatrix::Zero(dim, dim);
    for (int n = k; n < dim; ++n) a(n - k, n) = detail::loss_amplitude(n, k, eta);
    ops.push_back(std::move(a));
    if (eta == 1.0) break;
  }
  return ops;
}

inline CMatrix loss_channel_matrix(const CMatrix& rho, double eta) {
  detail::check_eta(eta);
  const int dim = static_cast<int>(rho.rows());
  if (eta == 1.0) return rho;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n < dim; ++n) {
      Complex acc = 0.0;
      for (int k = 0; m + k < dim && n + k < dim; ++k)
        acc += detail::loss_amplitude(m + k, k, eta) * detail::loss_amplitude(n + k, k, eta) *
               rho(m + k, n + k);
      out(m, n) = acc;
    }
  }
  return out;
}

// Adjoint (Heisenberg-picture) loss map, sum_k A_k^dag Q A_k.
inline CMatrix loss_adjoint_matrix(const CMatrix& q, double eta) {
  detail::check_eta(eta);
  const int dim = static_cast<int>(q.rows());
  if (eta == 1.0) return q;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n < dim; ++n) {
      Complex acc = 0.0;
      for (int k = 0; k <= std::min(m, n); ++k)
        acc += detail::loss_amplitude(m, k, eta) * detail::loss_amplitude(n, k, eta) *
               q(m - k, n - k);
      out(m, n) = acc;
    }
  }
  return out;
}

inline DensityMatrix loss_channel(const DensityMatrix& rho, double eta) {
  return DensityMatrix(loss_channel_matrix(rho.matrix(), eta));
}

// Generalized Laguerre polynomials L_n^(a)(x) for n = 0..count-1.
inline std::vector<double> laguerre_series(int count, double a, double x) {
  std::vector<double> l(std::max(count, 0));
  if (count > 0) l[0] = 1.0;
  if (count > 1) l[1] = 1.0 + a - x;
  for (int k = 1; k + 1 < count; ++k)
    l[k + 1] = ((2.0 * k + 1.0 + a - x) * l[k] - (k + a) * l[k - 1]) / (k + 1.0);
  return l;
}

// Exact matrix elements <m|D(beta)|n> of the untruncated displacement
// operator, restricted to 0 <= m, n < dim.
inline CMatrix displacement_elements(Complex beta, int dim) {
  if (dim < 1) throw InvalidDimension("displacement_elements: dim must be >= 1");
  CMatrix d = CMatrix::Zero(dim, dim);
  const double r2 = std::norm(beta);
  if (r2 == 0.0) return CMatrix::Identity(dim, dim);
  const double log_r = 0.5 * std::log(r2);
  const double phase = std::arg(beta);
  for (int diff = 0; diff < dim; ++diff) {
    // Lower triangle m = n + diff uses L_n^(diff); the upper triangle follows
    // from <n|D(beta)|m> = conj(<m|D(-beta)|n>).
    std::vector<double> lag = laguerre_series(dim - diff, diff, r2);
    for (int n = 0; n + diff < dim; ++n) {
      const int m = n + diff;
      double mag = std::exp(0.5 * (detail::log_factorial(n) - detail::log_factorial(m)) +
                            diff * log_r - 0.5 * r2) *
                   lag[n];
      Complex lower = mag * std::polar(1.0, diff * phase);
      d(m, n) = lower;
      if (diff > 0) d(n, m) = std::conj(lower) * ((diff % 2) ? -1.0 : 1.0);
    }
  }
  return d;
}

inline FockOperator displacement_operator(Complex beta, int dim) {
  return FockOperator(displacement_elements(beta, dim));
}

// Position-representation Fock wavefunctions psi_0(x) .. psi_{count-1}(x),
// built by the normalized Hermite recurrence.
inline RVector quadrature_wavefunctions(int count, double x) {
  RVector psi = RVector::Zero(std::max(count, 0));
  if (count == 0) return psi;
  psi(0) = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  if (count > 1) psi(1) = std::sqrt(2.0) * x * psi(0);
  for (int n = 2; n < count; ++n)
    psi(n) = std::sqrt(2.0 / n) * x * psi(n - 1) - std::sqrt((n - 1.0) / n) * psi(n - 2);
  return psi;
}

inline double quadrature_wavefunction(int n, double x) {
  if (n < 0) throw DomainError("quadrature_wavefunction: negative index");
  return quadrature_wavefunctions(n + 1, x)(n);
}

// W(x, p) = (1/pi) tr[rho D(2 alpha) Parity], alpha = (x + i p)/sqrt(2).
inline double wigner_at(const DensityMatrix& rho, double x, double p) {
  const int dim = rho.dim();
  const Complex two_alpha = std::sqrt(2.0) * Complex(x, p);
  CMatrix d = displacement_elements(two_alpha, dim);
  Complex acc = 0.0;
  for (int n = 0; n < dim; ++n) {
    const double parity = (n % 2) ? -1.0 : 1.0;
    for (int m = 0; m < dim; ++m) acc += rho(n, m) * d(m, n) * parity;
  }
  return acc.real() / kPi;
}

// Field indexed (i, j) <-> (xs[i], ps[j]).
inline RMatrix wigner(const DensityMatrix& rho, std::span<const double> xs,
                      std::span<const double> ps) {
  if (xs.empty() || ps.empty()) throw DomainError("wigner: empty grid");
  RMatrix w(xs.size(), ps.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) w(i, j) = wigner_at(rho, xs[i], ps[j]);
  return w;
}

// <psi|rho|psi> / tr(rho); psi is used as given (normalize it first).
inline double pure_state_fidelity(const PureState& target, const DensityMatrix& rho) {
  if (target.dim() != rho.dim()) throw InvalidDimension("pure_state_fidelity: dimension mismatch");
  double t = rho.trace();
  if (t <= 1e-12) throw UndefinedQuantity("pure_state_fidelity: output trace vanishes");
  Complex f = target.amplitudes().adjoint() * rho.matrix() * target.amplitudes();
  return std::clamp(f.real() / t, 0.0, 1.0);
}

inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  CMatrix d = a - b;
  d = 0.5 * (d + d.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidDimension("trace_distance: dimension mismatch");
  return trace_distance(a.matrix(), b.matrix());
}

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 of two PSD matrices.
inline double uhlmann_fidelity(const CMatrix& a, const CMatrix& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> ea(0.5 * (a + a.adjoint()));
  RVector la = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  CMatrix sa = ea.eigenvectors() * la.asDiagonal() * ea.eigenvectors().adjoint();
  CMatrix m = sa * b * sa;
  Eigen::SelfAdjointEigenSolver<CMatrix> em(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  double s = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return s * s;
}

}  // namespace csqpt

#endif  // CSQPT_FOCK_HPP_
