/*
 * Copyright 2026 The mpgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "mpgp/normal.hpp"

#include <cmath>
#include <numbers>

namespace mpgp {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Phi(-x) / N(x) for x > 0, by backward evaluation of Laplace's continued fraction.
double mills_ratio(double x) {
  double tail = x;
  for (int k = 120; k >= 1; --k) tail = x + k / tail;
  return 1.0 / tail;
}

constexpr double kTailSwitch = -6.0;

}  // namespace

double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double norm_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

double log_norm_cdf(double z) {
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0));
  if (z >= kTailSwitch) return std::log(norm_cdf(z));
  return std::log(kInvSqrt2Pi) - 0.5 * z * z + std::log(mills_ratio(-z));
}

double norm_pdf_cdf_ratio(double z) {
  if (z >= kTailSwitch) return norm_pdf(z) / norm_cdf(z);
  return 1.0 / mills_ratio(-z);
}

GaussHermite::GaussHermite(int points) {
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  nodes.resize(points);
  weights.resize(points);
  for (int k = 0; k < points; ++k) {
    nodes[k] = eig.eigenvalues()(k);
    const double v = eig.eigenvectors()(0, k);
    weights[k] = v * v;
  }
}

double probit_likelihood(const Eigen::VectorXd& f, int label) {
  static const GaussHermite rule(64);
  double total = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    double log_prod = 0.0;
    for (Eigen::Index j = 0; j < f.size(); ++j) {
      if (j == label) continue;
      log_prod += log_norm_cdf(rule.nodes[q] + f(label) - f(j));
    }
    total += rule.weights[q] * std::exp(log_prod);
  }
  return total;
}

}  // namespace mpgp
