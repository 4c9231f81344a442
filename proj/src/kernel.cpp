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

#include "mpgp/kernel.hpp"

#include <cmath>
#include <sstream>

namespace mpgp {

double Hyperparams::magnitude() const { return std::exp(log_magnitude); }

double Hyperparams::lengthscale(Eigen::Index k) const {
  return std::exp(log_lengthscales.size() == 1 ? log_lengthscales(0) : log_lengthscales(k));
}

Vec Hyperparams::to_vector() const {
  Vec v(num_params());
  v(0) = log_magnitude;
  v.tail(log_lengthscales.size()) = log_lengthscales;
  return v;
}

Hyperparams Hyperparams::from_vector(const Vec& v) {
  if (v.size() < 2) throw std::invalid_argument("hyperparameter vector needs at least 2 entries");
  return Hyperparams(v(0), Vec(v.tail(v.size() - 1)));
}

void Hyperparams::validate(Eigen::Index dim) const {
  if (!std::isfinite(log_magnitude) || !log_lengthscales.allFinite())
    throw std::invalid_argument("hyperparameters must be finite");
  if (log_lengthscales.size() != 1 && log_lengthscales.size() != dim) {
    std::ostringstream msg;
    msg << "expected 1 or " << dim << " lengthscales, got " << log_lengthscales.size();
    throw std::invalid_argument(msg.str());
  }
}

void LabeledDataset::validate() const {
  if (X.rows() < 1) throw std::invalid_argument("dataset is empty");
  if (static_cast<Eigen::Index>(y.size()) != X.rows())
    throw std::invalid_argument("label count does not match covariate rows");
  if (num_classes < 2) throw std::invalid_argument("at least two classes are required");
  if (!X.allFinite()) throw std::invalid_argument("covariates contain non-finite values");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) {
      std::ostringstream msg;
      msg << "label of row " << i << " out of range";
      throw std::invalid_argument(msg.str());
    }
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    out.y.push_back(y[rows[r]]);
  }
  return out;
}

namespace {

Mat scaled_inputs(const Mat& X, const Hyperparams& theta) {
  Mat S = X;
  for (Eigen::Index k = 0; k < X.cols(); ++k) S.col(k) /= theta.lengthscale(k);
  return S;
}

Mat check_finite(Mat K) {
  if (!K.allFinite()) throw NumericalError("covariance overflow: hyperparameters too large");
  return K;
}

}  // namespace

Mat cross_covariance(const Mat& X, const Mat& Xstar, const Hyperparams& theta) {
  if (X.cols() != Xstar.cols()) throw std::invalid_argument("input dimension mismatch");
  theta.validate(X.cols());
  const Mat A = scaled_inputs(X, theta);
  const Mat B = scaled_inputs(Xstar, theta);
  const double s2 = theta.magnitude();
  Mat K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      K(i, j) = s2 * std::exp(-0.5 * (A.row(i) - B.row(j)).squaredNorm());
    }
  }
  return check_finite(std::move(K));
}

Mat build_covariance(const Mat& X, const Hyperparams& theta) {
  theta.validate(X.cols());
  const Mat A = scaled_inputs(X, theta);
  const double s2 = theta.magnitude();
  const Eigen::Index n = X.rows();
  Mat K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = s2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      K(i, j) = K(j, i) = s2 * std::exp(-0.5 * (A.row(i) - A.row(j)).squaredNorm());
    }
  }
  return check_finite(std::move(K));
}

Mat covariance_grad(const Mat& X, const Hyperparams& theta, Eigen::Index which) {
  if (which < 0 || which >= theta.num_params())
    throw std::out_of_range("hyperparameter index out of range");
  Mat K = build_covariance(X, theta);
  if (which == 0) return K;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = which - 1;
  // A shared lengthscale collects the squared distance over all dimensions.
  const bool shared = theta.log_lengthscales.size() == 1;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double r2 = 0.0;
      if (shared) {
        const double l = theta.lengthscale(0);
        r2 = (X.row(i) - X.row(j)).squaredNorm() / (l * l);
      } else {
        const double l = theta.lengthscale(p);
        const double diff = X(i, p) - X(j, p);
        r2 = diff * diff / (l * l);
      }
      K(i, j) *= r2;
    }
  }
  return K;
}

Mat prior_covariance(const Mat& X, const Hyperparams& theta) {
  Mat K = build_covariance(X, theta);
  K.diagonal().array() += kJitter * theta.magnitude();
  return K;
}

double prior_variance(const Hyperparams& theta) { return theta.magnitude() * (1.0 + kJitter); }

Mat prior_covariance_grad(const Mat& X, const Hyperparams& theta, Eigen::Index which) {
  Mat G = covariance_grad(X, theta, which);
  if (which == 0) G.diagonal().array() += kJitter * theta.magnitude();
  return G;
}

}  // namespace mpgp
