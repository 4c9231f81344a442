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

#include "mpgp/kernel.hpp"

namespace mpgp {

/// Natural parameters of the c-1 probit sites of one observation, indexed by
/// the classes other than the label in ascending order. Zeros mean "no
/// information yet".
struct SiteState {
  Vec tau;
  Vec nu;

  static SiteState zeros(int num_classes) {
    return {Vec::Zero(num_classes - 1), Vec::Zero(num_classes - 1)};
  }
};

/// Normalizer and first two moments of the tilted distribution of f_i.
struct TiltedResult {
  double log_z = 0.0;
  Vec mean;
  Mat cov;
};

/// Tilted normalizer and moments of Phi(s) N(s | m, v).
struct ProbitMoments {
  double z_hat = 0.0;
  double log_z_hat = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

/// Moments of Phi(s) N(s | cavity_mean, cavity_var). Throws
/// std::invalid_argument for a non-positive cavity variance.
ProbitMoments probit_site_moments(double cavity_mean, double cavity_var);

struct InnerOptions {
  double damping = 1.0;
  /// Number of sweeps over the c-1 sites; 0 runs until the largest site
  /// change drops below `tol` or `max_sweeps` is reached.
  int sweeps = 0;
  double tol = 1e-8;
  int max_sweeps = 50;
};

struct InnerResult {
  TiltedResult tilted;
  SiteState sites;
  int sweeps_run = 0;
  int skipped_updates = 0;
  bool converged = false;
};

/// EP over the augmented tilted distribution
///   N(w | [mu; 0], blkdiag(Sigma, 1)) prod_{j != label} Phi(w^T z_j),
/// z_j = [(e_label - e_j)^T, 1]^T, warm-started from `init`.
///
/// Sites are visited in ascending class order. A site whose cavity variance
/// is not positive is skipped for that sweep. Throws NumericalError when the
/// cavity is not SPD or the resulting tilted covariance is not SPD.
InnerResult tilted_moments(const Vec& cavity_mean, const Mat& cavity_cov, int label,
                           const SiteState& init, const InnerOptions& opts = {});

/// log Z of the inner approximation for fixed site parameters, using each
/// site's cavity under the implied Gaussian.
double tilted_log_z(const Vec& cavity_mean, const Mat& cavity_cov, int label,
                    const SiteState& sites);

}  // namespace mpgp
