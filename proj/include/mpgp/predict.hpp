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
#include <vector>

#include "mpgp/ep.hpp"

namespace mpgp {

struct PredictiveDistribution {
  Vec latent_mean;
  Mat latent_cov;
  Vec probs;
  /// Sum of the per-class normalizers before renormalization.
  double raw_sum = 0.0;
  /// Set when inner EP failed and the probabilities come from Monte Carlo.
  bool monte_carlo_fallback = false;
};

/// Latent predictive mean and covariance at one test input.
std::pair<Vec, Mat> latent_predict(const StructuredPosterior& post, const Mat& X,
                                   const Hyperparams& theta, const Vec& xstar);

struct ClassProbabilities {
  Vec probs;
  double raw_sum = 0.0;
  bool monte_carlo_fallback = false;
};

/// p(y* = k) for f* ~ N(mean, cov) under the multinomial probit, from the
/// normalizer of a cold-started inner EP run per class, renormalized.
ClassProbabilities class_probabilities(const Vec& mean, const Mat& cov);

/// Monte Carlo estimate of the same probabilities through the auxiliary
/// variable form v = f + e, y = argmax v.
Vec monte_carlo_class_probabilities(const Vec& mean, const Mat& cov, int samples, std::uint64_t seed);

/// Predictions at every row of Xstar.
std::vector<PredictiveDistribution> predict(const EpResult& result, const Mat& X, const Mat& Xstar);

}  // namespace mpgp
