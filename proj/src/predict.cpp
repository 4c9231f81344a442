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

#include "mpgp/predict.hpp"

#include <cmath>
#include <random>

namespace mpgp {

std::pair<Vec, Mat> latent_predict(const StructuredPosterior& post, const Mat& X, const Hyperparams& theta,
                                   const Vec& xstar) {
  const Vec k_star = cross_covariance(X, xstar.transpose(), theta).col(0);
  return post.predict(k_star, prior_variance(theta));
}

Vec monte_carlo_class_probabilities(const Vec& mean, const Mat& cov, int samples, std::uint64_t seed) {
  const Eigen::Index c = mean.size();
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("predictive covariance is not SPD");
  const Mat L = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec counts = Vec::Zero(c);
  Vec z(c);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index k = 0; k < c; ++k) z(k) = normal(rng);
    Vec v = mean + L * z;
    for (Eigen::Index k = 0; k < c; ++k) v(k) += normal(rng);
    Eigen::Index best = 0;
    v.maxCoeff(&best);
    counts(best) += 1.0;
  }
  return counts / static_cast<double>(samples);
}

ClassProbabilities class_probabilities(const Vec& mean, const Mat& cov) {
  const int c = static_cast<int>(mean.size());
  ClassProbabilities out;
  out.probs.resize(c);
  try {
    InnerOptions opts;
    opts.sweeps = 0;
    for (int k = 0; k < c; ++k) {
      const InnerResult r = tilted_moments(mean, cov, k, SiteState::zeros(c), opts);
      if (!std::isfinite(r.tilted.log_z)) throw NumericalError("non-finite normalizer");
      out.probs(k) = std::exp(r.tilted.log_z);
    }
    out.raw_sum = out.probs.sum();
    out.probs /= out.raw_sum;
  } catch (const NumericalError&) {
    out.probs = monte_carlo_class_probabilities(mean, cov, 100000, 0);
    out.raw_sum = 1.0;
    out.monte_carlo_fallback = true;
  }
  return out;
}

std::vector<PredictiveDistribution> predict(const EpResult& result, const Mat& X, const Mat& Xstar) {
  const Mat Ks = cross_covariance(X, Xstar, result.theta);
  const double kss = prior_variance(result.theta);
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(Xstar.rows()));
  for (Eigen::Index j = 0; j < Xstar.rows(); ++j) {
    PredictiveDistribution p;
    std::tie(p.latent_mean, p.latent_cov) = result.posterior.predict(Ks.col(j), kss);
    const ClassProbabilities cp = class_probabilities(p.latent_mean, p.latent_cov);
    p.probs = cp.probs;
    p.raw_sum = cp.raw_sum;
    p.monte_carlo_fallback = cp.monte_carlo_fallback;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mpgp
