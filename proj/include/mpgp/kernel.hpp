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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mpgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a factorization or a moment computation breaks down.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Squared-exponential hyperparameters on the log scale.
///
/// A single log-lengthscale is shared by every input dimension; a vector of
/// length d gives one lengthscale per dimension (ARD).
struct Hyperparams {
  double log_magnitude = 0.0;  // log sigma^2
  Vec log_lengthscales = Vec::Zero(1);

  Hyperparams() = default;
  Hyperparams(double log_mag, double log_ls)
      : log_magnitude(log_mag), log_lengthscales(Vec::Constant(1, log_ls)) {}
  Hyperparams(double log_mag, Vec log_ls)
      : log_magnitude(log_mag), log_lengthscales(std::move(log_ls)) {}

  double magnitude() const;
  /// Lengthscale of input dimension k, broadcasting a shared value.
  double lengthscale(Eigen::Index k) const;
  bool ard() const { return log_lengthscales.size() > 1; }
  /// 1 + number of lengthscales.
  Eigen::Index num_params() const { return 1 + log_lengthscales.size(); }

  /// Packs (log sigma^2, log l_1, ...) into one vector and back.
  Vec to_vector() const;
  static Hyperparams from_vector(const Vec& v);

  /// Throws std::invalid_argument unless all entries are finite and the
  /// lengthscale count is 1 or `dim`.
  void validate(Eigen::Index dim) const;
};

/// Covariates with 0-based class indices.
struct LabeledDataset {
  Mat X;                 // n x d
  std::vector<int> y;    // entries in [0, num_classes)
  int num_classes = 0;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
  void validate() const;
  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
};

/// Relative diagonal jitter: K + kJitter * sigma^2 * I.
inline constexpr double kJitter = 1e-6;

/// sigma^2 exp(-1/2 sum_k (x_ik - x_jk)^2 / l_k^2) for all row pairs of X.
Mat build_covariance(const Mat& X, const Hyperparams& theta);

/// Kernel between the rows of X (n) and the rows of Xstar (m); n x m.
Mat cross_covariance(const Mat& X, const Mat& Xstar, const Hyperparams& theta);

/// Derivative of build_covariance with respect to log-parameter `which`
/// (0 = log sigma^2, 1.. = log lengthscales in order).
Mat covariance_grad(const Mat& X, const Hyperparams& theta, Eigen::Index which);

/// Prior covariance used by the inference routines: the kernel matrix with
/// the relative jitter on its diagonal.
Mat prior_covariance(const Mat& X, const Hyperparams& theta);

/// Prior variance at a single test input, consistent with prior_covariance.
double prior_variance(const Hyperparams& theta);

/// Derivative of prior_covariance with respect to log-parameter `which`.
Mat prior_covariance_grad(const Mat& X, const Hyperparams& theta, Eigen::Index which);

}  // namespace mpgp
