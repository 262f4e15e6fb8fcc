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

// Coherent-state process tomography of heralded (trace-non-preserving)
// processes.
//
// Jamiolkowski convention: J = sum_{mn} |m><n| (x) E(|m><n|), so that
//   <m (x) j| J |n (x) k> = E^{mn}_{jk}   and   E(rho) = tr_in[(rho^T (x) 1) J].
// Row/column index of the product space is m * dim_out_ext + j. The output
// factor is extended by one fictitious level (index dim_out) standing for
// "no herald"; on the extended space the process is trace preserving,
// tr_out J = 1_in.

#ifndef CSQPT_TOMOGRAPHY_HPP_
#define CSQPT_TOMOGRAPHY_HPP_

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "csqpt/dataset.hpp"
#include "csqpt/fock.hpp"
#include "csqpt/homodyne.hpp"
#include "csqpt/parallel.hpp"
#include "csqpt/process_sim.hpp"

namespace csqpt {

// Rank-4 array E^{mn}_{jk}, stored row-major in (m, n, j, k).
class ProcessTensor {
 public:
  ProcessTensor(int dim_in, int dim_out)
      : dim_in_(dim_in), dim_out_(dim_out),
        elements_(static_cast<std::size_t>(dim_in) * dim_in * dim_out * dim_out, Complex(0.0)) {
    if (dim_in < 1 || dim_out < 1) throw InvalidDimension("ProcessTensor: dimensions must be >= 1");
  }

  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }

  Complex& operator()(int m, int n, int j, int k) { return elements_[index(m, n, j, k)]; }
  Complex operator()(int m, int n, int j, int k) const { return elements_[index(m, n, j, k)]; }

  const std::vector<Complex>& elements() const { return elements_; }
  std::vector<Complex>& elements() { return elements_; }

  // sum_j E^{mm}_{jj}: relative herald probability of |m>.
  double herald_probability(int m) const {
    double s = 0.0;
    for (int j = 0; j < dim_out_; ++j) s += (*this)(m, m, j, j).real();
    return s;
  }

  double hermiticity_error() const {
    double e = 0.0;
    for (int m = 0; m < dim_in_; ++m)
      for (int n = 0; n < dim_in_; ++n)
        for (int j = 0; j < dim_out_; ++j)
          for (int k = 0; k < dim_out_; ++k)
            e = std::max(e, std::abs((*this)(m, n, j, k) - std::conj((*this)(n, m, k, j))));
    return e;
  }

  // Choi matrix on the non-extended product space.
  CMatrix choi() const {
    const int d = dim_in_ * dim_out_;
    CMatrix c(d, d);
    for (int m = 0; m < dim_in_; ++m)
      for (int n = 0; n < dim_in_; ++n)
        for (int j = 0; j < dim_out_; ++j)
          for (int k = 0; k < dim_out_; ++k) c(m * dim_out_ + j, n * dim_out_ + k) = (*this)(m, n, j, k);
    return c;
  }

  // Leading dim_in x dim_out block.
  ProcessTensor cropped(int dim_in, int dim_out) const {
    if (dim_in > dim_in_ || dim_out > dim_out_) throw InvalidDimension("ProcessTensor::cropped: larger than source");
    ProcessTensor t(dim_in, dim_out);
    for (int m = 0; m < dim_in; ++m)
      for (int n = 0; n < dim_in; ++n)
        for (int j = 0; j < dim_out; ++j)
          for (int k = 0; k < dim_out; ++k) t(m, n, j, k) = (*this)(m, n, j, k);
    return t;
  }

  double min_choi_eigenvalue() const {
    CMatrix c = choi();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  std::size_t index(int m, int n, int j, int k) const {
    return ((static_cast<std::size_t>(m) * dim_in_ + n) * dim_out_ + j) * dim_out_ + k;
  }

  int dim_in_;
  int dim_out_;
  std::vector<Complex> elements_;
};

class JamiolkowskiOperator {
 public:
  JamiolkowskiOperator(int dim_in, int dim_out, CMatrix matrix)
      : dim_in_(dim_in), dim_out_(dim_out), matrix_(std::move(matrix)) {
    if (matrix_.rows() != dim_in_ * (dim_out_ + 1) || matrix_.cols() != matrix_.rows())
      throw InvalidDimension("JamiolkowskiOperator: matrix size does not match dimensions");
  }

  // Trace-preserving extended operator of the process that always fails to herald.
  static JamiolkowskiOperator maximally_mixed(int dim_in, int dim_out) {
    const int d = dim_in * (dim_out + 1);
    return {dim_in, dim_out, CMatrix::Identity(d, d) / static_cast<double>(dim_out + 1)};
  }

  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }       // physical output levels
  int dim_out_ext() const { return dim_out_ + 1; }  // plus the no-herald level
  int empty_index() const { return dim_out_; }
  const CMatrix& matrix() const { return matrix_; }

  CMatrix partial_trace_output() const { return partial_trace_output(matrix_, dim_in_, dim_out_ext()); }

  static CMatrix partial_trace_output(const CMatrix& x, int dim_in, int dim_out_ext) {
    CMatrix g = CMatrix::Zero(dim_in, dim_in);
    for (int m = 0; m < dim_in; ++m)
      for (int n = 0; n < dim_in; ++n)
        for (int j = 0; j < dim_out_ext; ++j) g(m, n) += x(m * dim_out_ext + j, n * dim_out_ext + j);
    return g;
  }

  double trace_preservation_error() const {
    return (partial_trace_output() - CMatrix::Identity(dim_in_, dim_in_)).cwiseAbs().maxCoeff();
  }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (matrix_ + matrix_.adjoint()),
                                              Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  // Extended output state E(rho), including the no-herald level.
  CMatrix apply_extended(const CMatrix& rho) const {
    const int de = dim_out_ext();
    CMatrix out = CMatrix::Zero(de, de);
    for (int m = 0; m < dim_in_; ++m)
      for (int n = 0; n < dim_in_; ++n) {
        const Complex r = rho(m, n);
        if (r == Complex(0.0)) continue;
        out.noalias() += r * matrix_.block(m * de, n * de, de, de);
      }
    return out;
  }

 private:
  int dim_in_;
  int dim_out_;
  CMatrix matrix_;
};

struct MLEConfig {
  int n_max = 7;
  int max_iterations = 2000;
  double tolerance = 1e-9;  // relative log-likelihood gain per iteration
  double eta = 1.0;         // detection efficiency folded into the POVM
  double bin_width = 0.05;  // quadrature binning, vacuum-variance-1/2 units
  bool herald_normalization = true;
  // Restrict the search to processes commuting with phase rotations. With
  // real-valued probes only, this supplies the probe-phase information.
  bool phase_covariant = true;
  int workers = 1;
  // Extra Fock levels carried by estimate_process and cropped from its result.
  // Without them, probe weight above the cutoff is explained by spurious
  // number-conserving terms in the top rows.
  int padding = 4;

  int dim() const { return n_max + 1; }
};

inline ProcessTensor jamiolkowski_to_tensor(const JamiolkowskiOperator& ej) {
  const int di = ej.dim_in(), d = ej.dim_out(), de = ej.dim_out_ext();
  ProcessTensor t(di, d);
  const CMatrix& j = ej.matrix();
  for (int m = 0; m < di; ++m)
    for (int n = 0; n < di; ++n)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) t(m, n, a, b) = j(m * de + a, n * de + b);
  return t;
}

// Embeds a tensor in the extended space; the no-herald block is 1 - tr_out(J),
// which makes the extension trace preserving (and PSD when the herald
// probabilities are bounded by one).
inline JamiolkowskiOperator tensor_to_jamiolkowski(const ProcessTensor& t) {
  const int di = t.dim_in(), d = t.dim_out(), de = d + 1;
  CMatrix j = CMatrix::Zero(di * de, di * de);
  for (int m = 0; m < di; ++m)
    for (int n = 0; n < di; ++n) {
      Complex tr = 0.0;
      for (int a = 0; a < d; ++a) {
        tr += t(m, n, a, a);
        for (int b = 0; b < d; ++b) j(m * de + a, n * de + b) = t(m, n, a, b);
      }
      j(m * de + d, n * de + d) = (m == n ? 1.0 : 0.0) - tr;
    }
  return {di, d, std::move(j)};
}

// [E(rho)]_{jk} = sum_{mn} E^{mn}_{jk} rho_{mn}; trace is the relative herald
// probability.
inline DensityMatrix apply_process(const ProcessTensor& t, const DensityMatrix& rho) {
  if (rho.dim() != t.dim_in()) throw InvalidDimension("apply_process: dimension mismatch");
  const int di = t.dim_in(), d = t.dim_out();
  CMatrix out = CMatrix::Zero(d, d);
  for (int m = 0; m < di; ++m)
    for (int n = 0; n < di; ++n) {
      const Complex r = rho(m, n);
      if (r == Complex(0.0)) continue;
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) out(j, k) += t(m, n, j, k) * r;
    }
  return DensityMatrix(std::move(out));
}

// Annihilation: E^{mn}_{jk} = sqrt(mn) d_{j,m-1} d_{k,n-1}.
// Creation: sqrt((m+1)(n+1)) d_{j,m+1} d_{k,n+1}, dropping images above the cutoff.
inline ProcessTensor ideal_process_tensor(BoxKind kind, int dim) {
  if (dim < 2) throw InvalidDimension("ideal_process_tensor: dim must be >= 2");
  ProcessTensor t(dim, dim);
  for (int m = 0; m < dim; ++m)
    for (int n = 0; n < dim; ++n) {
      if (kind == BoxKind::annihilation) {
        if (m >= 1 && n >= 1) t(m, n, m - 1, n - 1) = std::sqrt(static_cast<double>(m) * n);
      } else if (m + 1 < dim && n + 1 < dim) {
        t(m, n, m + 1, n + 1) = std::sqrt((m + 1.0) * (n + 1.0));
      }
    }
  return t;
}

// Probe state as seen by the tomography: coherent state truncated to the
// reconstruction cutoff and renormalized.
inline CMatrix probe_density(Complex alpha, int dim) {
  return DensityMatrix::from_pure(coherent_state(alpha, dim)).matrix();
}

// Heralded outcome operator rho_alpha^T (x) Pi_eta(x, theta) on the extended
// product space (zero on the no-herald level).
inline CMatrix measurement_operator(Complex alpha, double x, double theta, const MLEConfig& cfg) {
  const int d = cfg.dim(), de = d + 1;
  CMatrix pi = CMatrix::Zero(de, de);
  pi.topLeftCorner(d, d) = efficiency_povm(x, theta, cfg.eta, d).matrix();
  CMatrix rt = probe_density(alpha, d).transpose();
  return Eigen::kroneckerProduct(rt, pi).eval();
}

// Aggregated no-herald operator for a probe: weight * rho_alpha^T (x) |0><0|_empty.
inline CMatrix no_click_operator(Complex alpha, double weight, const MLEConfig& cfg) {
  const int d = cfg.dim(), de = d + 1;
  CMatrix e = CMatrix::Zero(de, de);
  e(d, d) = weight;
  CMatrix rt = probe_density(alpha, d).transpose();
  return Eigen::kroneckerProduct(rt, e).eval();
}

struct HeraldFactor {
  double alpha_in = 0.0;
  double alpha_box = 0.0;
  long long heralded = 0;
  long long total = 0;
  double frequency = 0.0;  // heralded / total
  double factor = 0.0;     // relative herald weight used in the reconstruction
};

namespace detail {

inline double dataset_alpha_box(const QuadratureDataset& d) {
  if (d.metadata.contains("alpha_box")) return d.metadata.get_double("alpha_box");
  if (d.metadata.contains("alpha_in")) return d.metadata.get_double("alpha_in");
  if (!d.samples.empty()) return d.samples.front().alpha_in;
  throw FormatError("dataset carries no probe amplitude");
}

inline long long dataset_total(const QuadratureDataset& d) {
  return d.metadata.contains("total_slots") ? d.metadata.get_int("total_slots")
                                            : static_cast<long long>(d.samples.size());
}

inline long long dataset_heralded(const QuadratureDataset& d) {
  return d.metadata.contains("heralded_slots") ? d.metadata.get_int("heralded_slots")
                                               : static_cast<long long>(d.heralded_count());
}

}  // namespace detail

// Relative herald frequencies per probe. The overall constant is fixed by
// giving the largest-amplitude probe the ideal-law weight law(alpha_max)/(n_max+1),
// i.e. the scale at which the ideal process keeps every Fock input of the
// reconstruction space at herald probability <= 1. Factors are capped at 1.
inline std::vector<HeraldFactor> herald_rate_normalization(const std::vector<QuadratureDataset>& data,
                                                           int n_max) {
  std::vector<HeraldFactor> out;
  out.reserve(data.size());
  std::size_t ref = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    HeraldFactor f;
    f.alpha_box = detail::dataset_alpha_box(data[i]);
    f.alpha_in = data[i].metadata.get_double_or("alpha_in", f.alpha_box);
    f.total = detail::dataset_total(data[i]);
    f.heralded = detail::dataset_heralded(data[i]);
    if (f.total <= 0) throw UndefinedQuantity("herald_rate_normalization: dataset with zero slots");
    f.frequency = static_cast<double>(f.heralded) / static_cast<double>(f.total);
    out.push_back(f);
    if (f.alpha_box > out[ref].alpha_box) ref = i;
  }
  if (out.empty()) return out;
  const double h_ref = out[ref].frequency;
  if (h_ref <= 0.0) throw UndefinedQuantity("herald_rate_normalization: reference probe never heralded");
  double ref_weight = 1.0;
  if (data[ref].metadata.contains("kind")) {
    BoxKind kind = parse_box_kind(data[ref].metadata.get("kind"));
    ref_weight = herald_probability_law(out[ref].alpha_box, kind) / (n_max + 1.0);
  }
  ref_weight = std::min(ref_weight, 1.0);
  for (auto& f : out) f.factor = std::min(1.0, f.frequency / h_ref * ref_weight);
  return out;
}

// Binned heralded data of one probe, ready for likelihood evaluation.
struct ProbeData {
  Complex alpha = 0.0;
  double heralded_weight = 0.0;  // total frequency weight of heralded events
  double no_click_weight = 0.0;
  int phase_count = 1;
  struct PhaseBins {
    double theta = 0.0;
    RMatrix psi;                   // dim x bins: Fock wavefunctions at bin centres
    std::vector<double> weights;   // frequency weight per bin
  };
  std::vector<PhaseBins> phases;
};

// Bins heralded samples and attaches herald/no-herald weights. `factors`
// must align with `data`. Probes with zero total weight are dropped.
inline std::vector<ProbeData> build_probes(const std::vector<QuadratureDataset>& data,
                                           const std::vector<double>& factors, const MLEConfig& cfg) {
  if (factors.size() != data.size()) throw InvalidDimension("build_probes: factor count mismatch");
  std::vector<ProbeData> probes;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ds = data[i];
    ProbeData p;
    p.alpha = detail::dataset_alpha_box(ds);
    std::map<double, std::map<long long, long long>> bins;
    long long n_heralded = 0;
    for (const auto& s : ds.samples) {
      if (!s.heralded) continue;
      bins[s.theta][static_cast<long long>(std::floor(s.x / cfg.bin_width))]++;
      ++n_heralded;
    }
    std::size_t phase_count = bins.size();
    if (ds.metadata.contains("phases")) phase_count = parse_list(ds.metadata.get("phases")).size();
    p.phase_count = static_cast<int>(std::max<std::size_t>(phase_count, 1));
    const double f = std::clamp(factors[i], 0.0, 1.0);
    p.heralded_weight = n_heralded > 0 ? f : 0.0;
    p.no_click_weight = 1.0 - f;
    if (p.heralded_weight + p.no_click_weight <= 0.0) continue;
    for (const auto& [theta, hist] : bins) {
      ProbeData::PhaseBins pb;
      pb.theta = theta;
      pb.psi.resize(cfg.dim(), static_cast<Eigen::Index>(hist.size()));
      int col = 0;
      for (const auto& [bin, count] : hist) {
        const double centre = (static_cast<double>(bin) + 0.5) * cfg.bin_width;
        pb.psi.col(col++) = quadrature_wavefunctions(cfg.dim(), centre);
        pb.weights.push_back(p.heralded_weight * static_cast<double>(count) / n_heralded);
      }
      p.phases.push_back(std::move(pb));
    }
    probes.push_back(std::move(p));
  }
  return probes;
}

struct MLEDiagnostics {
  bool converged = false;
  int iterations = 0;
  std::vector<double> log_likelihood;  // value after each accepted iterate (index 0: start)
  double max_tp_error = 0.0;
  double min_eigenvalue = 0.0;
  int diluted_steps = 0;
  long long clipped_events = 0;
};

struct MLEResult {
  JamiolkowskiOperator op;
  MLEDiagnostics diagnostics;
};

namespace detail {

// Zeroes elements that are not invariant under the joint phase rotation
// conj(U_phi) (x) U_phi (the no-herald level carries zero charge and never
// couples to physical output levels).
inline void twirl_phase_covariant(CMatrix& x, int dim_in, int d) {
  const int de = d + 1;
  for (int m = 0; m < dim_in; ++m)
    for (int j = 0; j < de; ++j)
      for (int n = 0; n < dim_in; ++n)
        for (int k = 0; k < de; ++k) {
          bool keep;
          if (j == d && k == d)
            keep = (m == n);
          else if (j == d || k == d)
            keep = false;
          else
            keep = (j - m) == (k - n);
          if (!keep) x(m * de + j, n * de + k) = 0.0;
        }
}

struct ProbeTerms {
  CMatrix r_block;  // extended-output block of the R operator for this probe
  double log_likelihood = 0.0;
  long long clipped = 0;
};

inline ProbeTerms probe_terms(const JamiolkowskiOperator& j, const ProbeData& p,
                              const CMatrix& rho_probe, const MLEConfig& cfg) {
  constexpr double kFloor = 1e-300;
  const int d = cfg.dim();
  ProbeTerms out;
  out.r_block = CMatrix::Zero(d + 1, d + 1);
  CMatrix sigma = j.apply_extended(rho_probe);
  if (p.no_click_weight > 0.0) {
    double p_empty = sigma(d, d).real();
    if (p_empty < kFloor) {
      p_empty = kFloor;
      out.clipped++;
    }
    out.log_likelihood += p.no_click_weight * std::log(p_empty);
    out.r_block(d, d) = p.no_click_weight / p_empty;
  }
  if (p.phases.empty()) return out;
  const CMatrix sigma_eta = loss_channel_matrix(sigma.topLeftCorner(d, d), cfg.eta);
  const double bin_scale = cfg.bin_width / p.phase_count;
  CMatrix q = CMatrix::Zero(d, d);
  for (const auto& ph : p.phases) {
    const RMatrix s = rotate_to_lo_frame(sigma_eta, ph.theta).real();
    const RMatrix sp = s * ph.psi;
    RVector scaled_weights(ph.weights.size());
    for (Eigen::Index b = 0; b < ph.psi.cols(); ++b) {
      double pdf = ph.psi.col(b).dot(sp.col(b));
      if (pdf < kFloor) {
        pdf = kFloor;
        out.clipped++;
      }
      out.log_likelihood += ph.weights[b] * std::log(pdf * bin_scale);
      scaled_weights(b) = ph.weights[b] / pdf;
    }
    const RMatrix qt = ph.psi * scaled_weights.asDiagonal() * ph.psi.transpose();
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) q(m, n) += qt(m, n) * std::polar(1.0, (m - n) * ph.theta);
  }
  out.r_block.topLeftCorner(d, d) = loss_adjoint_matrix(q, cfg.eta);
  return out;
}

struct Evaluation {
  double log_likelihood = 0.0;
  CMatrix r;
  long long clipped = 0;
};

inline Evaluation evaluate(const JamiolkowskiOperator& j, const std::vector<ProbeData>& probes,
                           const std::vector<CMatrix>& rho_probes, const MLEConfig& cfg) {
  std::vector<ProbeTerms> terms(probes.size());
  parallel_for(probes.size(), cfg.workers,
               [&](std::size_t i) { terms[i] = probe_terms(j, probes[i], rho_probes[i], cfg); });
  const int d = cfg.dim(), de = d + 1, di = cfg.dim();
  Evaluation ev;
  ev.r = CMatrix::Zero(di * de, di * de);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    ev.log_likelihood += terms[i].log_likelihood;
    ev.clipped += terms[i].clipped;
    ev.r.noalias() += Eigen::kroneckerProduct(rho_probes[i].transpose(), terms[i].r_block).eval();
  }
  if (cfg.phase_covariant) twirl_phase_covariant(ev.r, di, d);
  return ev;
}

// N[R J R] with the symmetric trace-preservation normalization G^{-1/2}.
inline CMatrix normalized_step(const CMatrix& r, const CMatrix& j, int dim_in, int de) {
  CMatrix x = r * j * r;
  x = 0.5 * (x + x.adjoint()).eval();
  CMatrix g = JamiolkowskiOperator::partial_trace_output(x, dim_in, de);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (g + g.adjoint()));
  RVector inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  CMatrix g_is = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
  CMatrix a = Eigen::kroneckerProduct(g_is, CMatrix::Identity(de, de)).eval();
  CMatrix out = a * x * a;
  return 0.5 * (out + out.adjoint());
}

}  // namespace detail

// Iterative maximum-likelihood reconstruction of the extended Jamiolkowski
// operator: J <- N[R J R], R = sum_i (f_i / p_i) M_i. A candidate that lowers
// the likelihood is replaced by the diluted update R_e = (1 + e R)/(1 + e),
// halving e from 0.5; if no dilution helps the iteration stops.
inline MLEResult mle_reconstruct(const std::vector<ProbeData>& probes, const MLEConfig& cfg) {
  const int di = cfg.dim(), d = cfg.dim(), de = d + 1;
  if (probes.empty()) throw UndefinedQuantity("mle_reconstruct: no probe data");
  std::vector<CMatrix> rho_probes;
  rho_probes.reserve(probes.size());
  for (const auto& p : probes) rho_probes.push_back(probe_density(p.alpha, di));

  MLEResult res{JamiolkowskiOperator::maximally_mixed(di, d), {}};
  auto& diag = res.diagnostics;
  detail::Evaluation cur = detail::evaluate(res.op, probes, rho_probes, cfg);
  diag.log_likelihood.push_back(cur.log_likelihood);
  diag.min_eigenvalue = res.op.min_eigenvalue();
  const CMatrix id = CMatrix::Identity(di * de, di * de);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    JamiolkowskiOperator cand(di, d, detail::normalized_step(cur.r, res.op.matrix(), di, de));
    detail::Evaluation next = detail::evaluate(cand, probes, rho_probes, cfg);
    if (next.log_likelihood < cur.log_likelihood) {
      bool accepted = false;
      for (double eps = 0.5; eps > 1e-6; eps *= 0.5) {
        CMatrix r_eps = (id + eps * cur.r) / (1.0 + eps);
        JamiolkowskiOperator c2(di, d, detail::normalized_step(r_eps, res.op.matrix(), di, de));
        detail::Evaluation e2 = detail::evaluate(c2, probes, rho_probes, cfg);
        if (e2.log_likelihood >= cur.log_likelihood) {
          cand = std::move(c2);
          next = std::move(e2);
          accepted = true;
          ++diag.diluted_steps;
          break;
        }
      }
      if (!accepted) {
        diag.converged = true;  // no ascent direction left at working precision
        break;
      }
    }
    const double gain = next.log_likelihood - cur.log_likelihood;
    res.op = std::move(cand);
    cur = std::move(next);
    diag.iterations = it + 1;
    diag.log_likelihood.push_back(cur.log_likelihood);
    diag.max_tp_error = std::max(diag.max_tp_error, res.op.trace_preservation_error());
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, res.op.min_eigenvalue());
    if (gain < cfg.tolerance * std::abs(cur.log_likelihood)) {
      diag.converged = true;
      break;
    }
  }
  diag.clipped_events = cur.clipped;
  return res;
}

// Convenience overload: herald normalization (unless disabled in cfg),
// binning and reconstruction straight from datasets.
inline MLEResult mle_reconstruct(const std::vector<QuadratureDataset>& data, const MLEConfig& cfg) {
  std::vector<double> factors(data.size(), 1.0);
  if (cfg.herald_normalization) {
    auto hf = herald_rate_normalization(data, cfg.n_max);
    for (std::size_t i = 0; i < hf.size(); ++i) factors[i] = hf[i].factor;
  }
  return mle_reconstruct(build_probes(data, factors, cfg), cfg);
}

struct ProcessEstimate {
  ProcessTensor tensor{1, 1};
  MLEDiagnostics diagnostics;
  std::vector<HeraldFactor> herald;
  std::vector<double> factors;  // weights actually used
};

// Reconstruction on the padded space n_max + padding, reported on n_max.
inline ProcessEstimate estimate_process(const std::vector<QuadratureDataset>& data, const MLEConfig& cfg) {
  if (cfg.padding < 0) throw DomainError("estimate_process: padding must be >= 0");
  MLEConfig work = cfg;
  work.n_max = cfg.n_max + cfg.padding;
  ProcessEstimate est;
  est.herald = herald_rate_normalization(data, work.n_max);
  est.factors.assign(data.size(), 1.0);
  if (cfg.herald_normalization)
    for (std::size_t i = 0; i < est.factors.size(); ++i) est.factors[i] = est.herald[i].factor;
  MLEResult res = mle_reconstruct(build_probes(data, est.factors, work), work);
  est.tensor = jamiolkowski_to_tensor(res.op).cropped(cfg.dim(), cfg.dim());
  est.diagnostics = std::move(res.diagnostics);
  return est;
}

}  // namespace csqpt

#endif  // CSQPT_TOMOGRAPHY_HPP_
