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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mpgp/ep.hpp"
#include "mpgp/kernel.hpp"

namespace mpgp {

/// Half Student-t on a positive parameter. With four degrees of freedom a
/// variance of 100 needs scale^2 = 100 (nu - 2) / nu = 50.
struct HyperPrior {
  double degrees_of_freedom = 4.0;
  double scale = 7.0710678118654752440;  // sqrt(50)

  /// log density of the positive parameter x.
  double log_density(double x) const;
  /// d log density / d x.
  double dlog_density(double x) const;

  /// Log prior of log-hyperparameters: sigma = exp(log sigma^2 / 2) and each
  /// lengthscale carry the half-t, plus the log-Jacobian of the map.
  double log_prior(const Vec& theta_log) const;
  Vec log_prior_grad(const Vec& theta_log) const;
};

enum class Method { kEp, kIep, kLa };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ObjectiveValue {
  double value = 0.0;
  Vec grad;
  bool failed = false;
};

/// Log evidence plus log hyperprior as a function of log-hyperparameters.
/// EP evaluations warm-start from the sites of the previous successful call.
class MapObjective {
 public:
  MapObjective(LabeledDataset data, Method method, EpOptions ep_opts = default_ep_options(),
               HyperPrior prior = {});

  ObjectiveValue operator()(const Vec& theta_log);
  const LabeledDataset& data() const { return data_; }
  Method method() const { return method_; }
  void reset_warm_start() { warm_.reset(); }

  static EpOptions default_ep_options();

 private:
  LabeledDataset data_;
  Method method_;
  EpOptions ep_opts_;
  HyperPrior prior_;
  std::unique_ptr<EpSites> warm_;
};

struct TraceEntry {
  int evaluation = 0;
  Vec theta_log;
  double value = 0.0;
  double grad_norm = 0.0;
  bool failed = false;
};

struct OptimizeResult {
  Hyperparams theta;
  double value = 0.0;
  Vec grad;
  std::vector<TraceEntry> trace;
  bool converged = false;
};

struct OptimizeOptions {
  int max_evals = 100;
  double grad_tol = 1e-4;
  double max_step = 2.0;  // largest move of any log-parameter per iteration
};

/// Quasi-Newton (BFGS) ascent with backtracking in log-parameter space.
/// Throws std::runtime_error when every evaluation fails.
OptimizeResult optimize(MapObjective& objective, const Hyperparams& init, const OptimizeOptions& opts = {});

/// Median pairwise Euclidean distance between rows.
double median_distance(const Mat& X);

/// Starting points: log sigma^2 in {0, 2} at the median-distance lengthscale,
/// and log sigma^2 = 2 at twice that lengthscale.
std::vector<Hyperparams> default_inits(const Mat& X, bool ard);

/// Best result over the default starting points.
OptimizeResult optimize_multistart(const LabeledDataset& data, Method method, bool ard,
                                   const OptimizeOptions& opts = {});

}  // namespace mpgp
