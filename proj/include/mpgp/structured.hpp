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

#include <utility>
#include <vector>

#include "mpgp/kernel.hpp"

namespace mpgp {

/// Site precision of one observation in its low-rank form:
///   Pi = diag(pi) - pi pi^T / (1^T pi),  pi = E_{-label} tau + e_label.
struct SitePrecision {
  Vec pi;
  Mat Pi;
};

SitePrecision site_precision(const Vec& tau, int label);

/// Site location a pi - E_{-label} nu with a = (1^T nu) / (1^T pi). Sums to zero.
Vec site_location(const Vec& tau, const Vec& nu, int label);

/// Gaussian posterior N((K^-1 + T)^-1 nu, (K^-1 + T)^-1) for a block-diagonal
/// prior with the same n x n block K for every class, and site precision
///
///   coupled:   T = D - D R (R^T D R)^-1 R^T D
///   uncoupled: T = D
///
/// where D = diag(precision) in class-major order and R stacks c identity
/// matrices. Factorizes the c blocks of A = I + D^1/2 K D^1/2 and the n x n
/// matrix P = R^T D^1/2 A^-1 D^1/2 R; the cn x cn posterior is never formed.
///
/// Matrices indexed by (class, observation) are c x n.
class StructuredPosterior {
 public:
  StructuredPosterior() = default;
  /// Throws NumericalError naming the class block (or P) that fails to factor.
  StructuredPosterior(Mat K, Mat precision, Mat location, bool coupled);

  int num_classes() const { return static_cast<int>(precision_.rows()); }
  Eigen::Index size() const { return K_.rows(); }
  bool coupled() const { return coupled_; }

  const Mat& prior_cov() const { return K_; }
  const Mat& precision() const { return precision_; }
  const Mat& location() const { return location_; }

  /// Posterior mean, c x n.
  const Mat& mean() const { return mean_; }
  /// (I - M K) nu, c x n; the posterior mean is K applied to each row.
  const Mat& weights() const { return weights_; }
  /// c x c marginal covariance of observation i.
  const Mat& marginal_cov(Eigen::Index i) const { return marginal_cov_[static_cast<std::size_t>(i)]; }
  Vec marginal_mean(Eigen::Index i) const { return mean_.col(i); }

  /// log |I + K T| from log|A| - log|R^T D R| + log|P|.
  double log_det() const { return log_det_; }

  /// M x with M = T (I + K T)^-1, for x given as c x n.
  Mat apply_M(const Mat& x) const;
  /// Diagonal n x n block of M for class k.
  Mat M_block(int k) const;

  /// Latent predictive mean (c) and covariance (c x c) at a test input with
  /// prior cross-covariance k_star (n) and prior variance k_ss.
  std::pair<Vec, Mat> predict(const Vec& k_star, double k_ss) const;

 private:
  Mat K_;
  Mat precision_;
  Mat location_;
  bool coupled_ = true;
  std::vector<Mat> B_;         // D_k^1/2 A_k^-1 D_k^1/2
  Eigen::LLT<Mat> P_chol_;
  Mat mean_;
  Mat weights_;
  std::vector<Mat> marginal_cov_;
  double log_det_ = 0.0;
};

}  // namespace mpgp
