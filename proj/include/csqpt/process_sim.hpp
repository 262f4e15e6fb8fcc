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

// Forward models of the heralded photon-subtraction (beam splitter) and
// photon-addition (parametric down-conversion) boxes, their imperfection
// models, and synthetic probe runs.

#ifndef CSQPT_PROCESS_SIM_HPP_
#define CSQPT_PROCESS_SIM_HPP_

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csqpt/dataset.hpp"
#include "csqpt/fock.hpp"
#include "csqpt/homodyne.hpp"

namespace csqpt {

enum class BoxKind { annihilation, creation };

inline std::string to_string(BoxKind k) {
  return k == BoxKind::annihilation ? "annihilation" : "creation";
}

inline BoxKind parse_box_kind(const std::string& s) {
  if (s == "annihilation") return BoxKind::annihilation;
  if (s == "creation") return BoxKind::creation;
  throw DomainError("unknown process kind '" + s + "' (expected annihilation|creation)");
}

// zeta = lambda * tau / hbar.
struct InteractionStrength {
  double zeta = 0.05;

  explicit InteractionStrength(double z = 0.05) : zeta(z) {
    if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("interaction strength must be > 0");
  }
  // First-order treatment is labeled valid when zeta * <n> <= 0.1.
  bool first_order_valid(double mean_photons) const { return zeta * mean_photons <= 0.1; }
};

struct ImperfectionModel {
  double t1 = 1.0;  // homodyne-path transmission
  double t2 = 1.0;  // mode-match transmission (creation only)
  BoxKind kind = BoxKind::annihilation;

  ImperfectionModel() = default;
  ImperfectionModel(double t1_, double t2_, BoxKind kind_) : t1(t1_), t2(t2_), kind(kind_) {
    if (!(t1 >= 0.0 && t1 <= 1.0) || !(t2 >= 0.0 && t2 <= 1.0))
      throw DomainError("ImperfectionModel: transmissions must lie in [0, 1]");
  }

  static ImperfectionModel ideal(BoxKind kind) { return {1.0, 1.0, kind}; }

  // Amplitude of the coherent state reaching the ideal operator.
  double effective_amplitude(double alpha_in) const {
    return kind == BoxKind::creation ? std::sqrt(t2) * alpha_in : alpha_in;
  }
  double output_transmission() const { return kind == BoxKind::creation ? t1 * t2 : t1; }
  // Mean X-quadrature shift sqrt(2 t1)(1 - t2) alpha_in of the creation output.
  double displacement_x(double alpha_in) const {
    return kind == BoxKind::creation ? std::sqrt(2.0 * t1) * (1.0 - t2) * alpha_in : 0.0;
  }
};

inline double effective_box_amplitude(double alpha_in, const ImperfectionModel& model) {
  return model.effective_amplitude(alpha_in);
}

struct HeraldedOutput {
  DensityMatrix conditional_state;  // unit trace when `defined`
  double herald_probability = 0.0;
  bool defined = true;
  bool truncation_warning = false;
};

namespace detail {

inline HeraldedOutput make_heralded(const CMatrix& unnormalized, double probability_scale) {
  const double tr = unnormalized.trace().real();
  HeraldedOutput out{DensityMatrix::zero(static_cast<int>(unnormalized.rows())), 0.0, false, false};
  if (tr <= 1e-300) return out;
  CMatrix c = unnormalized / tr;
  out.conditional_state = DensityMatrix(0.5 * (c + c.adjoint()));
  out.herald_probability = probability_scale * tr;
  out.defined = true;
  return out;
}

}  // namespace detail

// Leading-order heralded action: a rho a^dag with probability zeta^2 tr(a^dag a rho)
// or a^dag rho a with probability zeta^2 tr(a a^dag rho).
inline HeraldedOutput ideal_box_first_order(const DensityMatrix& rho, BoxKind kind,
                                            InteractionStrength zeta) {
  const int dim = rho.dim();
  FockOperator op = kind == BoxKind::annihilation ? annihilation_matrix(dim) : creation_matrix(dim);
  HeraldedOutput out = detail::make_heralded(op.conjugate(rho).matrix(), zeta.zeta * zeta.zeta);
  if (kind == BoxKind::creation) {
    // Weight pushed past the cutoff by a^dag is lost; flag it.
    double lost = dim * rho(dim - 1, dim - 1).real();
    double kept = rho.trace() + expectation(number_matrix(dim), rho) - lost;
    out.truncation_warning = lost > 0 && (kept <= 0 || lost / kept > kTruncationWarning);
  }
  return out;
}

// Exact two-mode evolution exp(zeta (a_s a_t^dag - a_s^dag a_t)) for the beam
// splitter or exp(zeta (a_s^dag a_t^dag - a_s a_t)) for down-conversion, trigger
// initially in vacuum and projected onto one photon. The signal is padded by
// `trigger_dim` levels internally and the result cropped back to rho.dim().
inline HeraldedOutput exact_two_mode_box(const DensityMatrix& rho, BoxKind kind,
                                         InteractionStrength zeta, int trigger_dim) {
  if (trigger_dim < 3) throw InvalidDimension("exact_two_mode_box: trigger_dim must be >= 3");
  const int ds = rho.dim() + trigger_dim;
  const int dt = trigger_dim;
  const CMatrix is = CMatrix::Identity(ds, ds), it = CMatrix::Identity(dt, dt);
  const CMatrix as = Eigen::kroneckerProduct(annihilation_matrix(ds).matrix(), it).eval();
  const CMatrix at = Eigen::kroneckerProduct(is, annihilation_matrix(dt).matrix()).eval();
  CMatrix gen = kind == BoxKind::annihilation ? CMatrix(as * at.adjoint() - as.adjoint() * at)
                                              : CMatrix(as.adjoint() * at.adjoint() - as * at);
  CMatrix u = (zeta.zeta * gen).exp();

  CMatrix vac_t = CMatrix::Zero(dt, dt);
  vac_t(0, 0) = 1.0;
  CMatrix in = Eigen::kroneckerProduct(rho.resized(ds).matrix(), vac_t).eval();
  CMatrix evolved = u * in * u.adjoint();

  CMatrix cond(ds, ds);
  for (int i = 0; i < ds; ++i)
    for (int j = 0; j < ds; ++j) cond(i, j) = evolved(i * dt + 1, j * dt + 1);

  double top_trigger = 0.0, beyond_signal = 0.0;
  for (int i = 0; i < ds; ++i) top_trigger += evolved(i * dt + dt - 1, i * dt + dt - 1).real();
  for (int i = rho.dim(); i < ds; ++i) beyond_signal += cond(i, i).real();

  const double full_trace = cond.trace().real();
  HeraldedOutput out =
      detail::make_heralded(cond.topLeftCorner(rho.dim(), rho.dim()), 1.0);
  if (out.defined) out.herald_probability = full_trace;
  out.truncation_warning =
      top_trigger > 1e-8 || (full_trace > 0 && beyond_signal / full_trace > kTruncationWarning);
  return out;
}

// Relative herald-rate shape <alpha|a^dag a|alpha> or <alpha|a a^dag|alpha>.
inline double herald_probability_law(double alpha, BoxKind kind) {
  return kind == BoxKind::annihilation ? alpha * alpha : 1.0 + alpha * alpha;
}

// Downstream losses (and, for creation, the mode-mismatch displacement) applied
// to the heralded state. The herald probability is left as is.
inline HeraldedOutput apply_imperfections(const HeraldedOutput& out, const ImperfectionModel& model,
                                          double alpha_in) {
  if (alpha_in < 0.0) throw DomainError("apply_imperfections: alpha_in must be >= 0");
  HeraldedOutput res = out;
  if (!out.defined) return res;
  CMatrix rho = loss_channel_matrix(out.conditional_state.matrix(), model.output_transmission());
  if (model.kind == BoxKind::creation) {
    const double beta = model.displacement_x(alpha_in) / std::sqrt(2.0);
    if (beta != 0.0) {
      const int dim = static_cast<int>(rho.rows());
      const int padded = dim + 16;
      CMatrix d = displacement_elements(beta, padded);
      CMatrix big = CMatrix::Zero(padded, padded);
      big.topLeftCorner(dim, dim) = rho;
      big = d * big * d.adjoint();
      rho = big.topLeftCorner(dim, dim);
    }
  }
  res.conditional_state = DensityMatrix(0.5 * (rho + rho.adjoint()));
  return res;
}

struct ProbeRunSettings {
  double alpha_in = 0.0;
  BoxKind kind = BoxKind::annihilation;
  ImperfectionModel model;
  InteractionStrength zeta{0.05};
  std::vector<double> phases;
  std::size_t samples_per_phase = 10000;
  std::uint64_t seed = 1;
  // Single free proportionality constant between the first-order herald
  // probability and the per-slot click probability (detector efficiency times
  // pulses per recording slot).
  double herald_scale = 20.0;
  int sim_dim = 20;
};

inline std::vector<double> uniform_phases(int count) {
  std::vector<double> ph(count);
  for (int i = 0; i < count; ++i) ph[i] = round_sig9(kPi * i / count);
  return ph;
}

// Per-slot click probability and the heralded/unheralded output states of
// one probe setting.
struct ProbeForwardModel {
  double alpha_box = 0.0;
  double slot_herald_probability = 0.0;
  HeraldedOutput heralded;
  DensityMatrix unheralded;
};

inline ProbeForwardModel probe_forward_model(const ProbeRunSettings& s) {
  if (s.alpha_in < 0.0) throw DomainError("probe amplitude must be >= 0");
  const double alpha_box = s.model.effective_amplitude(s.alpha_in);
  PureState probe = coherent_state(alpha_box, s.sim_dim);
  if (probe.truncation_warning())
    throw DomainError("probe amplitude too large for the simulation cutoff");
  HeraldedOutput box = ideal_box_first_order(DensityMatrix::from_pure(probe), s.kind, s.zeta);
  HeraldedOutput imperfect = apply_imperfections(box, s.model, s.alpha_in);
  // No click: the probe leaves the box untouched and only sees the path loss.
  DensityMatrix idle =
      DensityMatrix::from_pure(coherent_state(std::sqrt(s.model.t1) * s.alpha_in, s.sim_dim));
  double p = std::min(1.0, s.herald_scale * imperfect.herald_probability);
  if (!imperfect.defined) p = 0.0;
  return {alpha_box, p, imperfect, idle};
}

inline QuadratureDataset simulate_probe_run(const ProbeRunSettings& s) {
  if (s.phases.empty()) throw DomainError("simulate_probe_run: phase list is empty");
  for (double th : s.phases)
    if (!(th >= 0.0 && th < kPi)) throw DomainError("simulate_probe_run: phase outside [0, pi)");
  if (s.samples_per_phase == 0) throw DomainError("simulate_probe_run: samples_per_phase must be > 0");

  ProbeForwardModel fm = probe_forward_model(s);
  const double x_max = sampling_half_width(s.sim_dim);

  QuadratureDataset data;
  data.samples.reserve(s.phases.size() * s.samples_per_phase);
  long long heralded_total = 0;
  for (double theta : s.phases) {
    auto rng = make_stream(s.seed, {s.alpha_in, theta});
    std::vector<bool> flags(s.samples_per_phase);
    for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = uniform01(rng) < fm.slot_herald_probability;
    const bool any_click = std::find(flags.begin(), flags.end(), true) != flags.end();
    const bool any_idle = std::find(flags.begin(), flags.end(), false) != flags.end();
    std::optional<QuadratureSampler> click_sampler, idle_sampler;
    if (any_click) click_sampler.emplace(fm.heralded.conditional_state, theta, x_max);
    if (any_idle) idle_sampler.emplace(fm.unheralded, theta, x_max);
    for (bool h : flags) {
      double x = h ? click_sampler->sample(rng) : idle_sampler->sample(rng);
      data.samples.push_back({s.alpha_in, theta, round_sig9(x), h});
      heralded_total += h;
    }
  }

  auto& md = data.metadata;
  md.set("kind", to_string(s.kind));
  md.set("alpha_in", s.alpha_in);
  md.set("alpha_box", fm.alpha_box);
  md.set("t1", s.model.t1);
  md.set("t2", s.model.t2);
  md.set("zeta", s.zeta.zeta);
  md.set("herald_scale", s.herald_scale);
  md.set("slot_herald_probability", fm.slot_herald_probability);
  md.set("sim_dim", s.sim_dim);
  md.set("seed", std::to_string(s.seed));
  md.set("seed_lineage", "seed=" + std::to_string(s.seed) + ";stream=(seed,alpha_in,theta)");
  md.set("phases", format_list(s.phases));
  md.set("samples_per_phase", static_cast<long long>(s.samples_per_phase));
  md.set("total_slots", static_cast<long long>(data.samples.size()));
  md.set("heralded_slots", heralded_total);
  md.set("unheralded_model", s.kind == BoxKind::annihilation ? "attenuated_probe"
                                                             : "attenuated_probe;model_extrapolated");
  md.set("first_order_valid",
         s.zeta.first_order_valid(fm.alpha_box * fm.alpha_box) ? "true" : "false");
  return data;
}

}  // namespace csqpt

#endif  // CSQPT_PROCESS_SIM_HPP_
