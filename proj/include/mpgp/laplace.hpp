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

#include "mpgp/kernel.hpp"
#include "mpgp/structured.hpp"

namespace mpgp {

/// Softmax with max-subtraction.
Vec softmax_probs(const Vec& f);

struct LaplaceOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

/// Laplace approximation of the softmax GP classifier at its posterior mode.
///
/// The Hessian block of observation i is W_i = diag(p_i) - p_i p_i^T, which
/// has the same low-rank structure as the EP site precision, so the posterior
/// is held in a StructuredPosterior with precision p and location W f + grad.
struct LaplaceState {
  Mat mode;        // c x n latent mode
  Mat weights;     // c x n, mode = K weights_k for each class
  Mat probs;       // c x n softmax probabilities at the mode
  StructuredPosterior posterior;
  double log_posterior = 0.0;  // log p(y|f) - 1/2 f^T K^-1 f at the mode
  double log_marginal = 0.0;
  double residual = 0.0;       // max |f - K grad log p(y|f)|
  int iterations = 0;
  bool converged = false;
};

/// Newton's method with step halving on the unnormalized log posterior.
/// `init_weights` (c x n) starts the iteration at f = K init_weights.
LaplaceState newton_mode(const Mat& K, const std::vector<int>& labels, int num_classes,
                         const LaplaceOptions& opts = {}, const Mat* init_weights = nullptr);

/// Laplace fit on a dataset at fixed hyperparameters.
LaplaceState fit_laplace(const LabeledDataset& data, const Hyperparams& theta,
                         const LaplaceOptions& opts = {});

/// Gradient of the Laplace log marginal likelihood with respect to the
/// log-hyperparameters, including the implicit dependence of the mode.
Vec laplace_log_marginal_grad(const LaplaceState& state, const Mat& X, const Hyperparams& theta);

inline constexpr int kLaplacePredictiveDraws = 10000;

/// Class probabilities at xstar by averaging the softmax over draws from the
/// Gaussian latent predictive distribution.
Vec la_predict(const LaplaceState& state, const Mat& X, const Hyperparams& theta, const Vec& xstar,
               std::uint64_t seed = 0, int draws = kLaplacePredictiveDraws);

struct TkpPrediction {
  Vec probs;
  double raw_sum = 0.0;
  bool fallback = false;
};

/// Predictive probabilities as ratios of extended-dataset Laplace marginal
/// likelihoods, one extended fit per candidate class. When `warm_start` is
/// set the extended mode starts from the base mode and the Laplace
/// predictive mean at xstar.
TkpPrediction la_tkp_predict(const LabeledDataset& data, const Hyperparams& theta, const LaplaceState& base,
                             const Vec& xstar, bool warm_start = true, const LaplaceOptions& opts = {},
                             std::uint64_t seed = 0);

}  // namespace mpgp
