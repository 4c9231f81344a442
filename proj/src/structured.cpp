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

#include "mpgp/structured.hpp"

#include <cmath>
#include <string>

namespace mpgp {

SitePrecision site_precision(const Vec& tau, int label) {
  const Eigen::Index c = tau.size() + 1;
  if (label < 0 || label >= c) throw std::invalid_argument("label out of range");
  SitePrecision s;
  s.pi = Vec::Zero(c);
  for (Eigen::Index j = 0, k = 0; k < c; ++k) {
    if (k == label) continue;
    s.pi(k) = tau(j++);
  }
  s.pi(label) = 1.0;
  const double total = s.pi.sum();
  if (!(total > 0.0)) throw std::invalid_argument("site precision sum must be positive");
  s.Pi = Mat(s.pi.asDiagonal()) - s.pi * s.pi.transpose() / total;
  return s;
}

Vec site_location(const Vec& tau, const Vec& nu, int label) {
  const Eigen::Index c = tau.size() + 1;
  Vec pi = Vec::Zero(c);
  Vec expanded = Vec::Zero(c);
  for (Eigen::Index j = 0, k = 0; k < c; ++k) {
    if (k == label) continue;
    pi(k) = tau(j);
    expanded(k) = nu(j);
    ++j;
  }
  pi(label) = 1.0;
  const double a = nu.sum() / pi.sum();
  Vec out = a * pi - expanded;
  // The construction sums to zero exactly in exact arithmetic; remove rounding.
  out.array() -= out.sum() / static_cast<double>(c);
  return out;
}

StructuredPosterior::StructuredPosterior(Mat K, Mat precision, Mat location, bool coupled)
    : K_(std::move(K)),
      precision_(std::move(precision)),
      location_(std::move(location)),
      coupled_(coupled) {
  const Eigen::Index n = K_.rows();
  const int c = static_cast<int>(precision_.rows());
  if (precision_.cols() != n || location_.rows() != c || location_.cols() != n)
    throw std::invalid_argument("site parameter shape does not match the prior");
  if ((precision_.array() < 0.0).any()) throw std::invalid_argument("site precisions must be non-negative");

  log_det_ = 0.0;
  B_.resize(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) {
    const Vec s = precision_.row(k).transpose().cwiseSqrt();
    Mat A = s.asDiagonal() * K_ * s.asDiagonal();
    A.diagonal().array() += 1.0;
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success)
      throw NumericalError("factorization of class block " + std::to_string(k) + " failed");
    Mat W = s.asDiagonal();
    llt.matrixL().solveInPlace(W);
    B_[static_cast<std::size_t>(k)] = W.transpose() * W;
    log_det_ += 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  }

  if (coupled_) {
    Mat P = Mat::Zero(n, n);
    for (const Mat& B : B_) P += B;
    P_chol_.compute(P);
    if (P_chol_.info() != Eigen::Success) throw NumericalError("factorization of P failed");
    const Mat& L = P_chol_.matrixLLT();
    log_det_ += 2.0 * L.diagonal().array().log().sum();
    log_det_ -= precision_.colwise().sum().array().log().sum();
  }

  const Mat K_nu = location_ * K_;  // row k is (K nu_k)^T; K is symmetric
  weights_ = location_ - apply_M(K_nu);
  mean_ = weights_ * K_;

  // Sigma_i(k,l) = delta_kl (K_ii - (K B_k K)_ii) + (L_P^-1 B_k K e_i)^T (L_P^-1 B_l K e_i)
  std::vector<Mat> G(static_cast<std::size_t>(c));
  Mat diag_term(c, n);
  for (int k = 0; k < c; ++k) {
    Mat H = B_[static_cast<std::size_t>(k)] * K_;
    diag_term.row(k) = (K_.diagonal() - (K_.cwiseProduct(H)).colwise().sum().transpose()).transpose();
    if (coupled_) {
      P_chol_.matrixL().solveInPlace(H);
      G[static_cast<std::size_t>(k)] = std::move(H);
    }
  }
  marginal_cov_.assign(static_cast<std::size_t>(n), Mat::Zero(c, c));
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat& S = marginal_cov_[static_cast<std::size_t>(i)];
    S.diagonal() = diag_term.col(i);
    if (!coupled_) continue;
    for (int k = 0; k < c; ++k) {
      for (int l = 0; l <= k; ++l) {
        const double v = G[static_cast<std::size_t>(k)].col(i).dot(G[static_cast<std::size_t>(l)].col(i));
        S(k, l) += v;
        if (l != k) S(l, k) = S(k, l);
      }
    }
  }
}

Mat StructuredPosterior::apply_M(const Mat& x) const {
  const int c = num_classes();
  Mat y(c, size());
  for (int k = 0; k < c; ++k) y.row(k) = (B_[static_cast<std::size_t>(k)] * x.row(k).transpose()).transpose();
  if (!coupled_) return y;
  const Vec t = P_chol_.solve(Vec(y.colwise().sum().transpose()));
  for (int k = 0; k < c; ++k) y.row(k) -= (B_[static_cast<std::size_t>(k)] * t).transpose();
  return y;
}

Mat StructuredPosterior::M_block(int k) const {
  const Mat& B = B_.at(static_cast<std::size_t>(k));
  if (!coupled_) return B;
  return B - B * P_chol_.solve(B);
}

std::pair<Vec, Mat> StructuredPosterior::predict(const Vec& k_star, double k_ss) const {
  const int c = num_classes();
  Vec mean = weights_ * k_star;
  Mat cov = Mat::Zero(c, c);
  Mat U(size(), c);
  for (int k = 0; k < c; ++k) {
    U.col(k) = B_[static_cast<std::size_t>(k)] * k_star;
    cov(k, k) = k_ss - k_star.dot(U.col(k));
  }
  if (coupled_) {
    P_chol_.matrixL().solveInPlace(U);
    cov += U.transpose() * U;
  }
  return {mean, cov};
}

}  // namespace mpgp
