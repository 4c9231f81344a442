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

#include <cstdint>
#include <random>
#include <vector>

#include "mpgp/kernel.hpp"

namespace mpgp {

using Rng = std::mt19937_64;

/// Draw from N(mean, 1) restricted to [lower, inf).
double truncated_normal_below(double mean, double lower, Rng& rng);
/// Draw from N(mean, 1) restricted to (-inf, upper].
double truncated_normal_above(double mean, double upper, Rng& rng);

inline constexpr int kConeScans = 5;

/// Draw of v ~ N(f, I) restricted to the cone {v_label > v_k for all k},
/// by coordinate-wise Gibbs scans inside the cone. `state`, when given and
/// inside the cone, is the starting point and receives the result.
Vec sample_auxiliary(const Vec& f, int label, Rng& rng, Vec* state = nullptr, int scans = kConeScans);

/// Exact sampler for p(f | v) with independent class blocks
/// N(K (K+I)^-1 v_k, K - K (K+I)^-1 K).
class LatentSampler {
 public:
  explicit LatentSampler(const Mat& K);
  /// v and the result are c x n.
  Mat sample(const Mat& v, Rng& rng) const;
  const Mat& posterior_cov() const { return cov_; }
  const Mat& gain() const { return gain_; }

 private:
  Mat gain_;  // K (K+I)^-1
  Mat cov_;
  Mat chol_;
};

struct GibbsOptions {
  int samples = 4000;  // retained draws after thinning
  int burn_in = 2000;
  int thin = 5;
  std::uint64_t seed = 1;
};

struct GibbsChain {
  /// One retained draw per row, columns in class-major order (k * n + i).
  Mat f_samples;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thin = 0;
  long cone_draws = 0;
};

struct GibbsSummary {
  Mat mean;                      // c x n posterior means
  std::vector<Mat> cov;          // per observation c x c posterior covariance
  Mat train_probs;               // c x n, averaged probit likelihood
};

struct GibbsResult {
  GibbsChain chain;
  GibbsSummary summary;
  Hyperparams theta;
  int num_classes = 0;
};

/// Alternates the auxiliary and latent draws at fixed hyperparameters.
GibbsResult run_gibbs(const LabeledDataset& data, const Hyperparams& theta, const GibbsOptions& opts = {});

/// Posterior summaries from a chain; `rows` restricts to a subset of draws.
GibbsSummary summarize(const GibbsChain& chain, const std::vector<int>& labels, int num_classes,
                       Eigen::Index first_row, Eigen::Index last_row);

/// Predictive class probabilities at each row of Xstar (m x c): one draw of
/// f* | f per retained sample, averaging the multinomial probit likelihood.
Mat gibbs_predict(const GibbsResult& result, const Mat& X, const Mat& Xstar, std::uint64_t seed);

}  // namespace mpgp
