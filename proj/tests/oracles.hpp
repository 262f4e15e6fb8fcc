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

// Reference computations for the tests. They deliberately take a different
// route from the library: brute-force two-mode unitaries, matrix exponentials,
// closed-form special functions and direct numerical integration.

#ifndef CSQPT_TESTS_ORACLES_HPP_
#define CSQPT_TESTS_ORACLES_HPP_

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <random>

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;

// Ladder operator built from its defining action, independently of the library.
inline CMatrix lowering(int dim) {
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

// c_n = e^{-|a|^2/2} a^n / sqrt(n!) by direct evaluation, no renormalization.
inline CVector coherent_closed_form(Complex alpha, int dim) {
  CVector v(dim);
  for (int n = 0; n < dim; ++n)
    v(n) = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, n) / std::sqrt(std::tgamma(n + 1.0));
  return v;
}

// exp(beta a^dag - conj(beta) a) in a padded space, cropped to dim.
inline CMatrix displacement_expm(Complex beta, int dim, int pad = 40) {
  const int big = dim + pad;
  CMatrix a = lowering(big);
  CMatrix gen = beta * a.adjoint() - std::conj(beta) * a;
  CMatrix u = gen.exp();
  return u.topLeftCorner(dim, dim);
}

// Loss as a beam splitter with a vacuum environment, traced out.
inline CMatrix loss_beam_splitter(const CMatrix& rho, double eta) {
  const int d = static_cast<int>(rho.rows());
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix a = Eigen::kroneckerProduct(lowering(d), id).eval();
  const CMatrix b = Eigen::kroneckerProduct(id, lowering(d)).eval();
  const double t = std::acos(std::sqrt(eta));
  const CMatrix u = (t * (a.adjoint() * b - a * b.adjoint())).exp();
  CMatrix env = CMatrix::Zero(d, d);
  env(0, 0) = 1.0;
  const CMatrix in = Eigen::kroneckerProduct(rho, env).eval();
  const CMatrix out = u * in * u.adjoint();
  CMatrix red = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) red(i, j) += out(i * d + k, j * d + k);
  return red;
}

// psi_n(x) = H_n(x) e^{-x^2/2} / sqrt(2^n n! sqrt(pi)) with physicists' H_n.
inline double hermite_function(int n, double x) {
  return std::hermite(n, x) * std::exp(-0.5 * x * x) /
         std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0) * std::sqrt(kPi));
}

// W(x, p) = (1/pi) int dy <x+y|rho|x-y> e^{-2ipy}, by the trapezoid rule.
inline double wigner_integral(const CMatrix& rho, double x, double p, double half = 8.0, int steps = 4000) {
  const int d = static_cast<int>(rho.rows());
  const double h = 2.0 * half / steps;
  Complex acc = 0.0;
  for (int s = 0; s <= steps; ++s) {
    const double y = -half + s * h;
    Complex v = 0.0;
    for (int m = 0; m < d; ++m) {
      const double pm = hermite_function(m, x + y);
      if (pm == 0.0) continue;
      for (int n = 0; n < d; ++n) v += pm * rho(m, n) * hermite_function(n, x - y);
    }
    const double w = (s == 0 || s == steps) ? 0.5 : 1.0;
    acc += w * v * std::polar(1.0, -2.0 * p * y);
  }
  return (acc * h).real() / kPi;
}

// Random density matrix: G G^dag / tr with complex Gaussian G.
inline CMatrix random_density(int dim, std::mt19937_64& rng, int rank = -1) {
  std::normal_distribution<double> g(0.0, 1.0);
  const int r = rank > 0 ? rank : dim;
  CMatrix m(dim, r);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < r; ++j) m(i, j) = Complex(g(rng), g(rng));
  CMatrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

inline CVector random_pure(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(g(rng), g(rng));
  return v.normalized();
}

}  // namespace oracle

#endif  // CSQPT_TESTS_ORACLES_HPP_
