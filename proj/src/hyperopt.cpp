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

#include "mpgp/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mpgp/laplace.hpp"

namespace mpgp {

double HyperPrior::log_density(double x) const {
  const double nu = degrees_of_freedom;
  return std::log(2.0) + std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi) - std::log(scale) -
         0.5 * (nu + 1.0) * std::log1p(x * x / (nu * scale * scale));
}

double HyperPrior::dlog_density(double x) const {
  const double nu = degrees_of_freedom;
  return -(nu + 1.0) * x / (nu * scale * scale + x * x);
}

double HyperPrior::log_prior(const Vec& theta_log) const {
  const double sigma = std::exp(0.5 * theta_log(0));
  double total = log_density(sigma) + 0.5 * theta_log(0) - std::log(2.0);
  for (Eigen::Index p = 1; p < theta_log.size(); ++p) total += log_density(std::exp(theta_log(p))) + theta_log(p);
  return total;
}

Vec HyperPrior::log_prior_grad(const Vec& theta_log) const {
  Vec g(theta_log.size());
  const double sigma = std::exp(0.5 * theta_log(0));
  g(0) = dlog_density(sigma) * 0.5 * sigma + 0.5;
  for (Eigen::Index p = 1; p < theta_log.size(); ++p) {
    const double l = std::exp(theta_log(p));
    g(p) = dlog_density(l) * l + 1.0;
  }
  return g;
}

Method parse_method(const std::string& name) {
  if (name == "ep") return Method::kEp;
  if (name == "iep") return Method::kIep;
  if (name == "la") return Method::kLa;
  throw std::invalid_argument("unknown inference method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kEp: return "ep";
    case Method::kIep: return "iep";
    case Method::kLa: return "la";
  }
  return "?";
}

EpOptions MapObjective::default_ep_options() {
  EpOptions o;
  o.outer_tol = 1e-8;
  o.max_outer = 200;
  return o;
}

MapObjective::MapObjective(LabeledDataset data, Method method, EpOptions ep_opts, HyperPrior prior)
    : data_(std::move(data)), method_(method), ep_opts_(ep_opts), prior_(prior) {
  data_.validate();
  ep_opts_.mode = method == Method::kIep ? EpMode::kIndependent : EpMode::kFull;
}

ObjectiveValue MapObjective::operator()(const Vec& theta_log) {
  ObjectiveValue out;
  out.grad = Vec::Zero(theta_log.size());
  if (!theta_log.allFinite()) {
    out.failed = true;
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  const Hyperparams theta = Hyperparams::from_vector(theta_log);
  try {
    double evidence = 0.0;
    Vec grad;
    if (method_ == Method::kLa) {
      const LaplaceState st = fit_laplace(data_, theta);
      evidence = st.log_marginal;
      grad = laplace_log_marginal_grad(st, data_.X, theta);
    } else {
      EpResult r = run_ep(data_, theta, ep_opts_, warm_.get());
      evidence = r.log_z;
      grad = log_marginal_grad(r, data_.X).grad;
      warm_ = std::make_unique<EpSites>(std::move(r.sites));
    }
    out.value = evidence + prior_.log_prior(theta_log);
    out.grad = grad + prior_.log_prior_grad(theta_log);
    if (!std::isfinite(out.value) || !out.grad.allFinite()) throw NumericalError("non-finite objective");
  } catch (const std::exception&) {
    out.failed = true;
    out.value = -std::numeric_limits<double>::infinity();
    out.grad = Vec::Zero(theta_log.size());
  }
  return out;
}

OptimizeResult optimize(MapObjective& objective, const Hyperparams& init, const OptimizeOptions& opts) {
  OptimizeResult res;
  int evals = 0;
  auto evaluate = [&](const Vec& x) {
    ObjectiveValue v = objective(x);
    ++evals;
    res.trace.push_back({evals, x, v.value, v.failed ? 0.0 : v.grad.cwiseAbs().maxCoeff(), v.failed});
    return v;
  };

  Vec x = init.to_vector();
  ObjectiveValue cur = evaluate(x);
  if (cur.failed) throw std::runtime_error("objective evaluation failed at the initial hyperparameters");

  const Eigen::Index p = x.size();
  // Inverse Hessian of the negated objective.
  Mat H = Mat::Identity(p, p);
  bool scaled = false;
  while (evals < opts.max_evals) {
    if (cur.grad.cwiseAbs().maxCoeff() < opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (!scaled) {
      H *= std::min(1.0, 1.0 / cur.grad.norm());
      scaled = true;
    }
    Vec dir = H * cur.grad;  // ascent direction
    if (dir.dot(cur.grad) <= 0.0) {
      H = Mat::Identity(p, p) * std::min(1.0, 1.0 / cur.grad.norm());
      dir = H * cur.grad;
    }
    const double biggest = dir.cwiseAbs().maxCoeff();
    if (biggest > opts.max_step) dir *= opts.max_step / biggest;

    double step = 1.0;
    bool accepted = false;
    Vec x_new;
    ObjectiveValue next;
    const double slope = dir.dot(cur.grad);
    while (evals < opts.max_evals) {
      x_new = x + step * dir;
      next = evaluate(x_new);
      if (!next.failed && next.value >= cur.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
      if (step < 1e-10) break;
    }
    if (!accepted) break;

    const Vec s = x_new - x;
    const Vec y = cur.grad - next.grad;  // gradient change of the negated objective
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(p, p);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    x = x_new;
    cur = next;
  }
  if (!res.converged && cur.grad.cwiseAbs().maxCoeff() < opts.grad_tol) res.converged = true;
  res.theta = Hyperparams::from_vector(x);
  res.value = cur.value;
  res.grad = cur.grad;
  return res;
}

double median_distance(const Mat& X) {
  std::vector<double> d;
  const Eigen::Index n = X.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((X.row(i) - X.row(j)).norm());
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

std::vector<Hyperparams> default_inits(const Mat& X, bool ard) {
  const double ll = std::log(median_distance(X));
  const Eigen::Index m = ard ? X.cols() : 1;
  return {Hyperparams(0.0, Vec::Constant(m, ll)), Hyperparams(2.0, Vec::Constant(m, ll)),
          Hyperparams(2.0, Vec::Constant(m, ll + std::log(2.0)))};
}

OptimizeResult optimize_multistart(const LabeledDataset& data, Method method, bool ard,
                                   const OptimizeOptions& opts) {
  OptimizeResult best;
  bool have = false;
  for (const Hyperparams& init : default_inits(data.X, ard)) {
    MapObjective objective(data, method);
    try {
      OptimizeResult r = optimize(objective, init, opts);
      if (!have || r.value > best.value) {
        best = std::move(r);
        have = true;
      }
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  if (!have) throw std::runtime_error("hyperparameter optimization failed from every starting point");
  return best;
}

}  // namespace mpgp
