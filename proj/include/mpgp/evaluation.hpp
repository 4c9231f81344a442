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
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpgp/data.hpp"
#include "mpgp/ep.hpp"
#include "mpgp/gibbs.hpp"
#include "mpgp/hyperopt.hpp"

namespace mpgp {

/// Everything that can produce test-set class probabilities.
enum class Predictor { kEp, kIep, kLa, kLaTkp, kGibbs, kUniform };

Predictor parse_predictor(const std::string& name);
std::string predictor_name(Predictor p);
/// Evidence used to choose hyperparameters for a predictor.
Method selection_method(Predictor p);

struct RunConfig {
  EpOptions ep;
  GibbsOptions gibbs;
  OptimizeOptions optimize;
  bool ard = false;
  std::optional<Hyperparams> fixed_theta;
  std::uint64_t seed = 0;
  bool tkp_warm_start = true;
  int bootstrap_replicates = 10000;
};

struct FitPredict {
  Mat probs;  // m x c
  double log_evidence = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRecord> trace;
  bool flagged = false;
};

/// Trains `p` on standardized training data at fixed hyperparameters and
/// predicts the rows of Xtest. `warm` / `sites_out` carry EP sites between
/// calls.
FitPredict fit_predict(Predictor p, const LabeledDataset& train, const Hyperparams& theta, const Mat& Xtest,
                       const RunConfig& cfg, const EpSites* warm = nullptr, EpSites* sites_out = nullptr);

/// Type-II MAP hyperparameters for a predictor, or cfg.fixed_theta.
Hyperparams select_hyperparams(Predictor p, const LabeledDataset& train, const RunConfig& cfg);

/// Mean log probability of the true labels, and accuracy of the argmax.
double mean_log_predictive(const Mat& probs, const std::vector<int>& labels);
double accuracy(const Mat& probs, const std::vector<int>& labels);

struct Interval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Posterior mean of `values` under the Bayesian bootstrap with a central 95% interval.
Interval bayesian_bootstrap(const std::vector<double>& values, int replicates, std::uint64_t seed);

struct MethodReport {
  std::string name;
  std::size_t n_test = 0;
  Interval mlpd;
  Interval accuracy;
  std::optional<Interval> lpd_difference;  // vs the reference method, per test point
  std::vector<int> failed_folds;
  std::vector<Hyperparams> fold_theta;
  std::vector<std::vector<SweepRecord>> fold_traces;
  std::vector<double> fold_seconds;
};

struct RunReport {
  std::vector<std::string> label_names;
  int folds = 0;
  std::uint64_t seed = 0;
  std::string reference;
  std::vector<MethodReport> methods;
  bool partial = false;
};

/// Stratified k-fold cross-validation: standardization and hyperparameters
/// come from the training folds only.
RunReport cv_run(const IngestedData& dataset, int folds, const std::vector<Predictor>& methods,
                 const RunConfig& cfg);

/// Evaluation on a fixed train/test split, reported like a single fold.
RunReport holdout_run(const IngestedData& train, const LabeledDataset& test, const std::vector<Predictor>& methods,
                      const RunConfig& cfg);

/// Writes the report as JSON; timings only when requested.
void write_report(std::ostream& out, const RunReport& report, bool include_timings);

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  int steps = 1;
  std::vector<double> values() const;
};

/// Parses "lmin:lmax:steps,smin:smax:steps".
std::pair<GridAxis, GridAxis> parse_grid(const std::string& spec);

struct GridRow {
  std::string method;
  double log_magnitude = 0.0;
  double log_lengthscale = 0.0;
  double log_evidence = std::numeric_limits<double>::quiet_NaN();
  double mlpd = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
};

/// Evaluates every (log lengthscale, log magnitude) node, EP runs warm-started
/// from the previous node. Inputs are raw; the training split is used for
/// standardization.
std::vector<GridRow> grid_sweep(const LabeledDataset& train, const LabeledDataset& test, const GridAxis& lengthscale,
                                const GridAxis& magnitude, const std::vector<Predictor>& methods,
                                const RunConfig& cfg, bool warm_start = true);

void write_grid(std::ostream& out, const std::vector<GridRow>& rows);

}  // namespace mpgp
