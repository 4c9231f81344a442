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

#include "mpgp/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpgp/normal.hpp"

namespace mpgp {

double truncated_normal_below(double mean, double lower, Rng& rng) {
  const double alpha = lower - mean;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (alpha <= 0.0) {
    // Acceptance probability is at least one half.
    for (;;) {
      const double z = normal(rng);
      if (z >= alpha) return mean + z;
    }
  }
  // Exponential proposal with the optimal rate (Robert, 1995).
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  std::exponential_distribution<double> expo(lambda);
  for (;;) {
    const double z = alpha + expo(rng);
    const double d = z - lambda;
    if (unif(rng) <= std::exp(-0.5 * d * d)) return mean + z;
  }
}

double truncated_normal_above(double mean, double upper, Rng& rng) {
  return -truncated_normal_below(-mean, -upper, rng);
}

Vec sample_auxiliary(const Vec& f, int label, Rng& rng, Vec* state, int scans) {
  const Eigen::Index c = f.size();
  Vec v;
  auto inside = [&](const Vec& x) {
    for (Eigen::Index k = 0; k < c; ++k)
      if (k != label && !(x(label) > x(k))) return false;
    return true;
  };
  if (state && state->size() == c && inside(*state)) {
    v = *state;
  } else {
    v = f;
    double others = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < c; ++k)
      if (k != label) others = std::max(others, v(k));
    v(label) = truncated_normal_below(f(label), others, rng);
  }
  for (int s = 0; s < scans; ++s) {
    for (Eigen::Index k = 0; k < c; ++k) {
      if (k != label) v(k) = truncated_normal_above(f(k), v(label), rng);
    }
    double others = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < c; ++k)
      if (k != label) others = std::max(others, v(k));
    v(label) = truncated_normal_below(f(label), others, rng);
  }
  if (state) *state = v;
  return v;
}

LatentSampler::LatentSampler(const Mat& K) {
  const Eigen::Index n = K.rows();
  Mat KI = K;
  KI.diagonal().array() += 1.0;
  Eigen::LLT<Mat> llt(KI);
  if (llt.info() != Eigen::Success) throw NumericalError("factorization of K + I failed");
  gain_ = llt.solve(K).transpose();
  Mat X = K;
  llt.matrixL().solveInPlace(X);
  cov_ = K - X.transpose() * X;
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Mat C = cov_;
    C.diagonal().array() += jitter;
    Eigen::LLT<Mat> c_llt(C);
    if (c_llt.info() == Eigen::Success) {
      chol_ = c_llt.matrixL();
      return;
    }
    jitter = jitter == 0.0 ? 1e-12 * (1.0 + cov_.diagonal().maxCoeff()) : jitter * 10.0;
  }
  (void)n;
  throw NumericalError("factorization of the latent conditional covariance failed");
}

Mat LatentSampler::sample(const Mat& v, Rng& rng) const {
  std::normal_distribution<double> normal;
  const Eigen::Index n = gain_.rows();
  Mat f(v.rows(), n);
  Vec z(n);
  for (Eigen::Index k = 0; k < v.rows(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    f.row(k) = (gain_ * v.row(k).transpose() + chol_ * z).transpose();
  }
  return f;
}

GibbsSummary summarize(const GibbsChain& chain, const std::vector<int>& labels, int num_classes,
                       Eigen::Index first_row, Eigen::Index last_row) {
  const int c = num_classes;
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index s = last_row - first_row;
  if (s < 1) throw std::invalid_argument("empty sample range");
  GibbsSummary out;
  out.mean = Mat::Zero(c, n);
  out.cov.assign(static_cast<std::size_t>(n), Mat::Zero(c, c));
  out.train_probs = Mat::Zero(c, n);
  Vec fi(c);
  for (Eigen::Index r = first_row; r < last_row; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < c; ++k) fi(k) = chain.f_samples(r, k * n + i);
      out.mean.col(i) += fi;
      out.cov[static_cast<std::size_t>(i)] += fi * fi.transpose();
      for (int k = 0; k < c; ++k) out.train_probs(k, i) += probit_likelihood(fi, k);
    }
  }
  const double inv = 1.0 / static_cast<double>(s);
  out.mean *= inv;
  out.train_probs *= inv;
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat& C = out.cov[static_cast<std::size_t>(i)];
    C = C * inv - out.mean.col(i) * out.mean.col(i).transpose();
  }
  return out;
}

GibbsResult run_gibbs(const LabeledDataset& data, const Hyperparams& theta, const GibbsOptions& opts) {
  data.validate();
  if (opts.samples < 1 || opts.thin < 1 || opts.burn_in < 0) throw std::invalid_argument("invalid chain length");
  const Eigen::Index n = data.size();
  const int c = data.num_classes;
  const LatentSampler sampler(prior_covariance(data.X, theta));

  GibbsResult res;
  res.theta = theta;
  res.num_classes = c;
  res.chain.seed = opts.seed;
  res.chain.burn_in = opts.burn_in;
  res.chain.thin = opts.thin;
  res.chain.f_samples.resize(opts.samples, c * n);

  Rng rng(opts.seed);
  Mat f = Mat::Zero(c, n);
  Mat v = Mat::Zero(c, n);
  std::vector<Vec> cone(static_cast<std::size_t>(n));
  const long total = static_cast<long>(opts.burn_in) + static_cast<long>(opts.samples) * opts.thin;
  Eigen::Index kept = 0;
  for (long it = 1; it <= total; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      v.col(i) = sample_auxiliary(f.col(i), data.y[static_cast<std::size_t>(i)], rng,
                                  &cone[static_cast<std::size_t>(i)]);
      ++res.chain.cone_draws;
    }
    f = sampler.sample(v, rng);
    if (it > opts.burn_in && (it - opts.burn_in) % opts.thin == 0) {
      for (int k = 0; k < c; ++k) res.chain.f_samples.row(kept).segment(k * n, n) = f.row(k);
      ++kept;
    }
  }
  res.summary = summarize(res.chain, data.y, c, 0, kept);
  return res;
}

Mat gibbs_predict(const GibbsResult& result, const Mat& X, const Mat& Xstar, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  const int c = result.num_classes;
  const Mat K = prior_covariance(X, result.theta);
  Eigen::LLT<Mat> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("factorization of K failed");
  const Mat Ks = cross_covariance(X, Xstar, result.theta);
  const Mat proj = llt.solve(Ks);  // K^-1 k_*
  const double kss = prior_variance(result.theta);
  const Mat& draws = result.chain.f_samples;

  Rng rng(seed);
  std::normal_distribution<double> normal;
  Mat probs = Mat::Zero(Xstar.rows(), c);
  Vec fstar(c);
  for (Eigen::Index j = 0; j < Xstar.rows(); ++j) {
    const double sd = std::sqrt(std::max(kss - Ks.col(j).dot(proj.col(j)), 0.0));
    for (Eigen::Index r = 0; r < draws.rows(); ++r) {
      for (int k = 0; k < c; ++k) fstar(k) = draws.row(r).segment(k * n, n).dot(proj.col(j)) + sd * normal(rng);
      for (int k = 0; k < c; ++k) probs(j, k) += probit_likelihood(fstar, k);
    }
  }
  return probs / static_cast<double>(draws.rows());
}

}  // namespace mpgp
