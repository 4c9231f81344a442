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

#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mpgp {

double norm_pdf(double z);
double norm_cdf(double z);

/// log Phi(z), accurate deep into the lower tail.
double log_norm_cdf(double z);

/// N(z) / Phi(z). Uses a continued fraction for the Mills ratio below -6.
double norm_pdf_cdf_ratio(double z);

/// Nodes and weights of an m-point Gauss-Hermite rule for E[g(u)], u ~ N(0,1).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
  explicit GaussHermite(int points);
};

/// Multinomial probit likelihood E_u prod_{j != y} Phi(u + f_y - f_j) for a
/// fixed latent vector, integrated over u by Gauss-Hermite quadrature.
double probit_likelihood(const Eigen::VectorXd& f, int label);

}  // namespace mpgp
