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

#include "mpgp/laplace.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace mpgp {

Vec softmax_probs(const Vec& f) {
  const Vec e = (f.array() - f.maxCoeff()).exp();
  return e / e.sum();
}

namespace {

struct Evaluation {
  Mat probs;
  Mat grad;
  double log_lik = 0.0;
};

Evaluation evaluate(const Mat& f, const std::vector<int>& labels) {
  Evaluation e;
  e.probs.resize(f.rows(), f.cols());
  e.grad = Mat::Zero(f.rows(), f.cols());
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    const Vec fi = f.col(i);
    const int y = labels[static_cast<std::size_t>(i)];
    const double mx = fi.maxCoeff();
    const double lse = mx + std::log((fi.array() - mx).exp().sum());
    e.log_lik += fi(y) - lse;
    e.probs.col(i) = (fi.array() - lse).exp();
    e.grad.col(i) = -e.probs.col(i);
    e.grad(y, i) += 1.0;
  }
  return e;
}

double log_posterior(const Mat& weights, const Mat& f, const std::vector<int>& labels) {
  return evaluate(f, labels).log_lik - 0.5 * weights.cwiseProduct(f).sum();
}

// W f + grad, column by column.
Mat newton_location(const Mat& f, const Evaluation& e) {
  Mat b = e.probs.cwiseProduct(f);
  for (Eigen::Index i = 0; i < f.cols(); ++i) b.col(i) -= e.probs.col(i) * e.probs.col(i).dot(f.col(i));
  return b + e.grad;
}

}  // namespace

LaplaceState newton_mode(const Mat& K, const std::vector<int>& labels, int num_classes,
                         const LaplaceOptions& opts, const Mat* init_weights) {
  const Eigen::Index n = K.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw std::invalid_argument("label count mismatch");
  LaplaceState st;
  Mat a = init_weights ? *init_weights : Mat::Zero(num_classes, n);
  if (a.rows() != num_classes || a.cols() != n) throw std::invalid_argument("initial weights have wrong shape");
  Mat f = a * K;
  double psi = log_posterior(a, f, labels);

  for (int it = 0; it < opts.max_iter; ++it) {
    const Evaluation e = evaluate(f, labels);
    const double gap = (a - e.grad).cwiseAbs().maxCoeff();
    const StructuredPosterior post(K, e.probs, newton_location(f, e), true);
    const Mat direction = post.weights() - a;
    double step = 1.0;
    Mat a_new;
    Mat f_new;
    double psi_new = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 40; ++halving) {
      a_new = a + step * direction;
      f_new = a_new * K;
      psi_new = log_posterior(a_new, f_new, labels);
      if (psi_new >= psi) break;
      step *= 0.5;
    }
    st.iterations = it + 1;
    if (!(psi_new >= psi)) {
      // No ascent possible along the Newton direction: at the mode up to rounding.
      st.converged = gap < 1e-6;
      break;
    }
    const double improvement = psi_new - psi;
    a = std::move(a_new);
    f = std::move(f_new);
    psi = psi_new;
    if (improvement < opts.tol && gap < std::sqrt(opts.tol)) {
      st.converged = true;
      break;
    }
  }

  const Evaluation e = evaluate(f, labels);
  st.mode = f;
  st.weights = a;
  st.probs = e.probs;
  st.posterior = StructuredPosterior(K, e.probs, newton_location(f, e), true);
  st.log_posterior = psi;
  st.log_marginal = psi - 0.5 * st.posterior.log_det();
  st.residual = (f - e.grad * K).cwiseAbs().maxCoeff();
  return st;
}

LaplaceState fit_laplace(const LabeledDataset& data, const Hyperparams& theta, const LaplaceOptions& opts) {
  data.validate();
  return newton_mode(prior_covariance(data.X, theta), data.y, data.num_classes, opts);
}

Vec laplace_log_marginal_grad(const LaplaceState& state, const Mat& X, const Hyperparams& theta) {
  const StructuredPosterior& post = state.posterior;
  const int c = post.num_classes();
  const Eigen::Index n = post.size();
  const Mat& K = post.prior_cov();
  // At the mode the weights equal the likelihood gradient.
  const Mat grad = state.weights;

  // d(-1/2 log|I + K W|) / d f_i^m through W_i.
  Mat s2(c, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec p = state.probs.col(i);
    const Mat W = Mat(p.asDiagonal()) - p * p.transpose();
    const Mat& S = post.marginal_cov(i);
    const Vec Sp = S * p;
    for (int m = 0; m < c; ++m) {
      const Vec w = W.col(m);
      s2(m, i) = -0.5 * (S.diagonal().dot(w) - 2.0 * Sp.dot(w));
    }
  }

  std::vector<Mat> M(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) M[static_cast<std::size_t>(k)] = post.M_block(k);

  Vec out(theta.num_params());
  for (Eigen::Index p = 0; p < out.size(); ++p) {
    const Mat dK = prior_covariance_grad(X, theta, p);
    double explicit_part = 0.0;
    for (int k = 0; k < c; ++k) {
      const Vec gk = grad.row(k).transpose();
      explicit_part += 0.5 * gk.dot(dK * gk) - 0.5 * M[static_cast<std::size_t>(k)].cwiseProduct(dK).sum();
    }
    const Mat u = grad * dK;
    const Mat df = u - post.apply_M(u) * K;
    out(p) = explicit_part + s2.cwiseProduct(df).sum();
  }
  return out;
}

Vec la_predict(const LaplaceState& state, const Mat& X, const Hyperparams& theta, const Vec& xstar,
               std::uint64_t seed, int draws) {
  const Vec k_star = cross_covariance(X, xstar.transpose(), theta).col(0);
  const auto [mean, cov] = state.posterior.predict(k_star, prior_variance(theta));
  const Eigen::Index c = mean.size();
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("Laplace predictive covariance is not SPD");
  const Mat L = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec acc = Vec::Zero(c);
  Vec z(c);
  for (int s = 0; s < draws; ++s) {
    for (Eigen::Index k = 0; k < c; ++k) z(k) = normal(rng);
    acc += softmax_probs(mean + L * z);
  }
  return acc / static_cast<double>(draws);
}

TkpPrediction la_tkp_predict(const LabeledDataset& data, const Hyperparams& theta, const LaplaceState& base,
                             const Vec& xstar, bool warm_start, const LaplaceOptions& opts, std::uint64_t seed) {
  const Eigen::Index n = data.size();
  const int c = data.num_classes;
  Mat Xext(n + 1, data.dim());
  Xext.topRows(n) = data.X;
  Xext.row(n) = xstar.transpose();
  const Mat Kext = prior_covariance(Xext, theta);
  std::vector<int> labels = data.y;
  labels.push_back(0);

  // [a; 0] reproduces the base mode on the training points and the Laplace
  // predictive mean k_*^T a at the new point.
  Mat init = Mat::Zero(c, n + 1);
  init.leftCols(n) = base.weights;

  TkpPrediction out;
  Vec log_ratio(c);
  try {
    for (int k = 0; k < c; ++k) {
      labels.back() = k;
      const LaplaceState ext = newton_mode(Kext, labels, c, opts, warm_start ? &init : nullptr);
      if (!ext.converged || !std::isfinite(ext.log_marginal)) throw NumericalError("extended Newton failed");
      log_ratio(k) = ext.log_marginal - base.log_marginal;
    }
  } catch (const NumericalError&) {
    out.probs = la_predict(base, data.X, theta, xstar, seed);
    out.raw_sum = 1.0;
    out.fallback = true;
    return out;
  }
  const Vec raw = log_ratio.array().exp();
  out.raw_sum = raw.sum();
  out.probs = raw / out.raw_sum;
  return out;
}

}  // namespace mpgp
