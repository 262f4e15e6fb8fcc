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

// Post-reconstruction analytics on process tensors.

#ifndef CSQPT_ANALYSIS_HPP_
#define CSQPT_ANALYSIS_HPP_

#include <gsl/gsl_multimin.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "csqpt/fock.hpp"
#include "csqpt/process_sim.hpp"
#include "csqpt/tomography.hpp"

namespace csqpt {

// E^{mm}_{kk} indexed (m, k).
inline RMatrix diagonal_elements(const ProcessTensor& t) {
  RMatrix out(t.dim_in(), t.dim_out());
  for (int m = 0; m < t.dim_in(); ++m)
    for (int k = 0; k < t.dim_out(); ++k) {
      Complex v = t(m, m, k, k);
      if (std::abs(v.imag()) > 1e-6)
        throw IntegrityError("diagonal_elements: imaginary diagonal element in process tensor");
      out(m, k) = v.real();
    }
  return out;
}

// Fock index the ideal operator maps |m> to.
inline int ideal_target_index(BoxKind kind, int m) {
  return kind == BoxKind::annihilation ? m - 1 : m + 1;
}

// Fraction of row m of the diagonal readout found at the ideal target index.
inline double target_mass_fraction(const RMatrix& diag, BoxKind kind, int m) {
  const double row = diag.row(m).sum();
  const int k = ideal_target_index(kind, m);
  if (row <= 0.0 || k < 0 || k >= diag.cols()) return 0.0;
  return diag(m, k) / row;
}

// Basis indices spanning the worst-case search subspace: |1>..|n> for
// annihilation, |0>..|n-1> for creation.
inline std::vector<int> fidelity_subspace(BoxKind kind, int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = kind == BoxKind::annihilation ? i + 1 : i;
  return idx;
}

// Output fidelity of one pure input, F = <psi_t|E(psi)|psi_t> / tr E(psi) with
// psi_t the normalized ideal image. Returns nullopt when the output trace
// vanishes.
inline std::optional<double> output_fidelity(const ProcessTensor& t, BoxKind kind,
                                             const CVector& psi) {
  const int d_in = t.dim_in(), d_out = t.dim_out();
  CVector target = CVector::Zero(d_out);
  for (int m = 0; m < d_in; ++m) {
    if (psi(m) == Complex(0.0)) continue;
    const int k = ideal_target_index(kind, m);
    if (k < 0 || k >= d_out) continue;
    target(k) += psi(m) * std::sqrt(static_cast<double>(kind == BoxKind::annihilation ? m : m + 1));
  }
  if (target.norm() == 0.0) return std::nullopt;
  target.normalize();
  DensityMatrix out = apply_process(t, DensityMatrix(psi * psi.adjoint()));
  if (out.trace() <= 1e-12) return std::nullopt;
  Complex f = target.adjoint() * out.matrix() * target;
  return std::clamp(f.real() / out.trace(), 0.0, 1.0);
}

struct FidelityReport {
  int n = 0;
  double worst_fidelity = 1.0;
  PureState argmin_state{CVector::Zero(1)};
  int restarts = 0;
  long long evaluations = 0;
  long long iterations = 0;
  long long skipped_candidates = 0;
};

struct FidelitySearchOptions {
  int restarts = 64;
  double size_tolerance = 1e-8;
  int max_iterations_per_restart = 20000;
};

namespace detail {

// Hyperspherical angles (n-1) then relative phases (n-1); the first
// coefficient is real and non-negative.
inline CVector state_from_angles(const double* params, const std::vector<int>& basis, int dim) {
  const int n = static_cast<int>(basis.size());
  CVector psi = CVector::Zero(dim);
  double carry = 1.0;
  for (int i = 0; i < n; ++i) {
    double mag = carry;
    if (i < n - 1) {
      mag *= std::cos(params[i]);
      carry *= std::sin(params[i]);
    }
    double phase = i == 0 ? 0.0 : params[n - 1 + i - 1];
    psi(basis[i]) = std::polar(mag, phase);
  }
  return psi;
}

struct FidelityObjective {
  const ProcessTensor* tensor;
  BoxKind kind;
  const std::vector<int>* basis;
  double best = std::numeric_limits<double>::infinity();
  CVector best_state;
  long long evaluations = 0;
  long long skipped = 0;

  double operator()(const double* params) { return consider(state_from_angles(params, *basis, tensor->dim_in())); }

  double consider(const CVector& psi) {
    ++evaluations;
    auto f = output_fidelity(*tensor, kind, psi);
    if (!f) {
      ++skipped;
      return 2.0;
    }
    if (*f < best) {
      best = *f;
      best_state = psi;
    }
    return *f;
  }
};

inline double gsl_fidelity_trampoline(const gsl_vector* v, void* params) {
  auto* obj = static_cast<FidelityObjective*>(params);
  return (*obj)(v->data);
}

// Inverse of state_from_angles for a state supported on `basis`.
inline std::vector<double> angles_from_state(const CVector& psi, const std::vector<int>& basis) {
  const int n = static_cast<int>(basis.size());
  std::vector<double> params(2 * n - 2, 0.0);
  Complex ref = psi(basis[0]);
  Complex gauge = std::abs(ref) > 0 ? std::conj(ref) / std::abs(ref) : Complex(1.0);
  double remaining = psi.norm();
  for (int i = 0; i < n - 1; ++i) {
    double mag = std::abs(psi(basis[i]));
    params[i] = remaining > 0 ? std::acos(std::clamp(mag / remaining, -1.0, 1.0)) : 0.0;
    remaining = std::sqrt(std::max(0.0, remaining * remaining - mag * mag));
  }
  for (int i = 1; i < n; ++i) params[n - 1 + i - 1] = std::arg(psi(basis[i]) * gauge);
  return params;
}

}  // namespace detail

// Minimum output fidelity over pure inputs in the subspace of size n, by
// multi-restart Nelder-Mead on the (2n-2)-dimensional angle parametrization.
// The reported value is the lowest fidelity evaluated anywhere in the search.
// `warm_start`, when given, seeds the first restart.
inline FidelityReport worst_case_fidelity(const ProcessTensor& t, BoxKind kind, int n,
                                          std::uint64_t seed,
                                          std::optional<PureState> warm_start = std::nullopt,
                                          const FidelitySearchOptions& opts = {}) {
  const int limit = kind == BoxKind::annihilation ? std::min(t.dim_in() - 1, t.dim_out())
                                                  : std::min(t.dim_in(), t.dim_out() - 1);
  if (n < 1 || n > limit) throw DomainError("worst_case_fidelity: subspace size out of range");
  const std::vector<int> basis = fidelity_subspace(kind, n);
  detail::FidelityObjective obj{&t, kind, &basis};
  FidelityReport rep;
  rep.n = n;

  const int dims = 2 * n - 2;
  if (dims == 0) {
    double dummy = 0.0;
    obj(&dummy);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, kPi / 2), phase(-kPi, kPi);
    const gsl_multimin_fminimizer_type* type = gsl_multimin_fminimizer_nmsimplex2;
    gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(type, dims);
    gsl_vector* x = gsl_vector_alloc(dims);
    gsl_vector* step = gsl_vector_alloc(dims);
    gsl_vector_set_all(step, 0.5);
    gsl_multimin_function fn{&detail::gsl_fidelity_trampoline, static_cast<std::size_t>(dims), &obj};
    for (int r = 0; r < opts.restarts; ++r) {
      if (r == 0 && warm_start && warm_start->dim() == t.dim_in()) {
        auto p = detail::angles_from_state(warm_start->amplitudes(), basis);
        // The warm start lives in a smaller subspace: the new coefficient is zero.
        for (int i = 0; i < dims; ++i) gsl_vector_set(x, i, p[i]);
        // Scored as given, so the angle round trip cannot lift the minimum.
        obj.consider(warm_start->amplitudes());
      } else {
        for (int i = 0; i < n - 1; ++i) gsl_vector_set(x, i, angle(rng));
        for (int i = n - 1; i < dims; ++i) gsl_vector_set(x, i, phase(rng));
      }
      gsl_multimin_fminimizer_set(solver, &fn, x, step);
      for (int it = 0; it < opts.max_iterations_per_restart; ++it) {
        ++rep.iterations;
        if (gsl_multimin_fminimizer_iterate(solver)) break;
        double size = gsl_multimin_fminimizer_size(solver);
        if (gsl_multimin_test_size(size, opts.size_tolerance) == GSL_SUCCESS) break;
      }
      ++rep.restarts;
    }
    gsl_vector_free(step);
    gsl_vector_free(x);
    gsl_multimin_fminimizer_free(solver);
  }
  rep.evaluations = obj.evaluations;
  rep.skipped_candidates = obj.skipped;
  if (obj.best_state.size() == 0) throw UndefinedQuantity("worst_case_fidelity: every candidate had zero output");
  rep.worst_fidelity = obj.best;
  rep.argmin_state = PureState(obj.best_state);
  return rep;
}

// Worst-case fidelities for n = 1..n_max, each search warm-started from the
// previous minimizer so the curve is nonincreasing in n.
inline std::vector<FidelityReport> worst_case_fidelity_curve(const ProcessTensor& t, BoxKind kind,
                                                             int n_max, std::uint64_t seed,
                                                             const FidelitySearchOptions& opts = {}) {
  std::vector<FidelityReport> out;
  std::optional<PureState> warm;
  for (int n = 1; n <= n_max; ++n) {
    out.push_back(worst_case_fidelity(t, kind, n, seed + n, warm, opts));
    warm = out.back().argmin_state;
  }
  return out;
}

struct RatePoint {
  double alpha = 0.0;  // effective amplitude at the box
  long long count = 0;
  long long total = 0;
};

struct CountRateFit {
  BoxKind kind = BoxKind::annihilation;
  double scale = 0.0;
  double quadratic_coefficient = 1.0;  // b; fixed to 1 for annihilation
  double residual = 0.0;               // chi-square
  int dof = 0;
  double p_value = 1.0;
};

// Weighted least squares of count/total against scale*alpha^2 (annihilation)
// or scale*(1 + b alpha^2) (creation), binomial weights re-evaluated from the
// model (iteratively reweighted).
inline CountRateFit fit_count_rates(const std::vector<RatePoint>& rates, BoxKind kind) {
  std::set<double> distinct;
  for (const auto& r : rates) {
    if (r.total <= 0) throw UndefinedQuantity("fit_count_rates: point with no slots");
    distinct.insert(r.alpha);
  }
  if (distinct.size() < 3) throw UndefinedQuantity("fit_count_rates: fewer than 3 distinct amplitudes");

  const int params = kind == BoxKind::annihilation ? 1 : 2;
  auto model = [&](double a, const Eigen::Vector2d& c) {
    return kind == BoxKind::annihilation ? c(0) * a * a : c(0) + c(1) * a * a;
  };
  Eigen::Vector2d coef = Eigen::Vector2d::Zero();
  std::vector<double> weight(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    double f = static_cast<double>(rates[i].count) / rates[i].total;
    double var = std::max(f * (1 - f), 1.0 / rates[i].total) / rates[i].total;
    weight[i] = 1.0 / var;
  }
  for (int pass = 0; pass < 20; ++pass) {
    Eigen::MatrixXd a(rates.size(), params);
    Eigen::VectorXd b(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double sw = std::sqrt(weight[i]);
      const double al2 = rates[i].alpha * rates[i].alpha;
      if (kind == BoxKind::annihilation) {
        a(i, 0) = sw * al2;
      } else {
        a(i, 0) = sw;
        a(i, 1) = sw * al2;
      }
      b(i) = sw * static_cast<double>(rates[i].count) / rates[i].total;
    }
    Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    Eigen::Vector2d next = Eigen::Vector2d::Zero();
    next.head(params) = sol;
    const bool settled = pass > 0 && (next - coef).norm() <= 1e-14 * std::max(1.0, next.norm());
    coef = next;
    if (settled) break;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      double p = std::clamp(model(rates[i].alpha, coef), 1e-12, 1.0 - 1e-12);
      weight[i] = rates[i].total / (p * (1 - p));
    }
  }

  CountRateFit fit;
  fit.kind = kind;
  fit.scale = coef(0);
  fit.quadratic_coefficient = kind == BoxKind::annihilation ? 1.0 : coef(1) / coef(0);
  if (kind == BoxKind::creation && coef(0) == 0.0)
    throw UndefinedQuantity("fit_count_rates: zero intercept for creation fit");
  double chi2 = 0.0;
  for (const auto& r : rates) {
    const double p = model(r.alpha, coef);
    const double expected = p * r.total;
    const double var = r.total * p * (1 - p);
    if (var <= 0.0) {
      if (r.count != static_cast<long long>(std::llround(expected)))
        chi2 = std::numeric_limits<double>::infinity();
      continue;
    }
    chi2 += std::pow(r.count - expected, 2) / var;
  }
  fit.residual = chi2;
  fit.dof = static_cast<int>(rates.size()) - params;
  if (std::isinf(chi2))
    fit.p_value = 0.0;
  else if (fit.dof > 0)
    fit.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(fit.dof), chi2));
  return fit;
}

struct WignerGrid {
  double x_min = -4.0, x_max = 4.0;
  int nx = 161;
  double p_min = -4.0, p_max = 4.0;
  int np = 161;

  std::vector<double> xs() const { return axis(x_min, x_max, nx); }
  std::vector<double> ps() const { return axis(p_min, p_max, np); }
  static std::vector<double> axis(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
  }
};

struct WignerField {
  double alpha = 0.0;
  double herald_trace = 0.0;
  bool skipped = false;
  std::string note;
  RMatrix field;  // (x index, p index)
  double min_value = 0.0;
  double min_x = 0.0, min_p = 0.0;
  double integral = 0.0;  // trapezoidal grid quadrature
};

inline double grid_integral(const RMatrix& f, const std::vector<double>& xs, const std::vector<double>& ps) {
  auto w = [](const std::vector<double>& ax, std::size_t i) {
    if (ax.size() < 2) return 1.0;
    double h = (ax.back() - ax.front()) / (ax.size() - 1);
    return (i == 0 || i + 1 == ax.size()) ? 0.5 * h : h;
  };
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) s += w(xs, i) * w(ps, j) * f(i, j);
  return s;
}

// Wigner functions of the renormalized outputs E(|alpha><alpha|).
inline std::vector<WignerField> wigner_report(const ProcessTensor& t, const std::vector<double>& alphas,
                                              const WignerGrid& grid) {
  std::vector<WignerField> out;
  const auto xs = grid.xs(), ps = grid.ps();
  for (double a : alphas) {
    WignerField wf;
    wf.alpha = a;
    DensityMatrix raw = apply_process(t, DensityMatrix::from_pure(coherent_state(a, t.dim_in())));
    wf.herald_trace = raw.trace();
    if (wf.herald_trace <= 1e-12) {
      wf.skipped = true;
      wf.note = "zero herald probability";
      out.push_back(std::move(wf));
      continue;
    }
    wf.field = wigner(raw.normalized(), xs, ps);
    Eigen::Index i = 0, j = 0;
    wf.min_value = wf.field.minCoeff(&i, &j);
    wf.min_x = xs[i];
    wf.min_p = ps[j];
    wf.integral = grid_integral(wf.field, xs, ps);
    out.push_back(std::move(wf));
  }
  return out;
}

// Uhlmann fidelity of the unit-trace Choi matrices of t and of the ideal tensor.
inline double process_fidelity_to_ideal(const ProcessTensor& t, BoxKind kind) {
  if (t.dim_in() != t.dim_out()) throw InvalidDimension("process_fidelity_to_ideal: non-square tensor");
  CMatrix a = t.choi();
  CMatrix b = ideal_process_tensor(kind, t.dim_in()).choi();
  const double ta = a.trace().real(), tb = b.trace().real();
  if (ta <= 1e-15) return 0.0;
  return std::clamp(uhlmann_fidelity(a / ta, b / tb), 0.0, 1.0);
}

}  // namespace csqpt

#endif  // CSQPT_ANALYSIS_HPP_
