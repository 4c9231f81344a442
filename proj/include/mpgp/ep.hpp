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

#include <vector>

#include "mpgp/inner_ep.hpp"
#include "mpgp/kernel.hpp"
#include "mpgp/structured.hpp"

namespace mpgp {

enum class EpMode { kFull, kIndependent };
enum class InnerMode { kStandard, kIncremental };

struct EpOptions {
  EpMode mode = EpMode::kFull;
  InnerMode inner_mode = InnerMode::kIncremental;
  double damping = 0.8;
  /// Drop the damping to 0.5 once log Z oscillates over five sweeps.
  bool auto_damping = true;
  double outer_tol = 1e-6;
  int max_outer = 100;
  double inner_tol = 1e-8;
  int inner_max_sweeps = 50;

  void validate() const;
};

/// Persistent site parameters of every observation.
///
/// In full mode the outer site (pi_i, nu_i) is a function of the inner sites.
/// In independent mode the outer site is a diagonal precision and a location
/// per class (c x n), and the inner sites only warm-start the tilted moments.
struct EpSites {
  std::vector<SiteState> inner;
  Mat diag_precision;
  Mat diag_location;

  static EpSites zeros(Eigen::Index n, int num_classes);
};

struct SweepRecord {
  int sweep = 0;
  double log_z = 0.0;
  double max_site_delta = 0.0;
  int skipped_sites = 0;
  double damping = 0.0;
  long inner_sweeps = 0;
};

struct EpDiagnostics {
  std::vector<SweepRecord> trace;
  std::vector<Eigen::Index> skipped_observations;  // across all sweeps
  bool converged = false;
  bool damping_fallback = false;
  long total_inner_sweeps = 0;
};

/// Cavity N(mean, cov) of one observation together with its precision.
struct Cavity {
  Vec mean;
  Mat cov;
  Mat precision;
  bool valid = false;
};

struct EpResult {
  Hyperparams theta;
  std::vector<int> labels;
  EpMode mode = EpMode::kFull;
  EpSites sites;
  StructuredPosterior posterior;
  double log_z = 0.0;
  EpDiagnostics diagnostics;
};

/// Builds the posterior implied by the current sites.
StructuredPosterior refresh_posterior(const Mat& K, const std::vector<int>& labels,
                                      const EpSites& sites, EpMode mode);

/// Cavity of observation i under the posterior and its current site.
Cavity cavity(const StructuredPosterior& post, const std::vector<int>& labels,
              const EpSites& sites, EpMode mode, Eigen::Index i);

/// Nested EP with parallel outer updates. `warm_start` seeds the site
/// parameters; otherwise all sites start vacuous.
EpResult run_ep(const LabeledDataset& data, const Hyperparams& theta, const EpOptions& opts = {},
                const EpSites* warm_start = nullptr);

/// EP approximation of log p(y | X, theta) for a refreshed posterior and its sites.
/// Returns NaN when a cavity is not SPD.
double log_marginal(const StructuredPosterior& post, const std::vector<int>& labels,
                    const EpSites& sites, EpMode mode);

struct EvidenceGradient {
  Vec grad;
  /// Set when the EP run did not converge; the gradient is only exact at a fixed point.
  bool approximate = false;
};

/// Gradient of log Z_EP with respect to the log-hyperparameters, keeping the
/// site parameters fixed.
EvidenceGradient log_marginal_grad(const EpResult& result, const Mat& X);

}  // namespace mpgp
