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

#include "mpgp/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mpgp/laplace.hpp"
#include "mpgp/predict.hpp"

namespace mpgp {

Predictor parse_predictor(const std::string& name) {
  if (name == "ep") return Predictor::kEp;
  if (name == "iep") return Predictor::kIep;
  if (name == "la") return Predictor::kLa;
  if (name == "la-tkp") return Predictor::kLaTkp;
  if (name == "gibbs") return Predictor::kGibbs;
  if (name == "uniform") return Predictor::kUniform;
  throw std::invalid_argument("unknown method: " + name);
}

std::string predictor_name(Predictor p) {
  switch (p) {
    case Predictor::kEp: return "ep";
    case Predictor::kIep: return "iep";
    case Predictor::kLa: return "la";
    case Predictor::kLaTkp: return "la-tkp";
    case Predictor::kGibbs: return "gibbs";
    case Predictor::kUniform: return "uniform";
  }
  return "?";
}

Method selection_method(Predictor p) {
  switch (p) {
    case Predictor::kIep: return Method::kIep;
    case Predictor::kLa:
    case Predictor::kLaTkp: return Method::kLa;
    default: return Method::kEp;
  }
}

FitPredict fit_predict(Predictor p, const LabeledDataset& train, const Hyperparams& theta, const Mat& Xtest,
                       const RunConfig& cfg, const EpSites* warm, EpSites* sites_out) {
  const int c = train.num_classes;
  const Eigen::Index m = Xtest.rows();
  FitPredict out;
  out.probs.resize(m, c);
  switch (p) {
    case Predictor::kEp:
    case Predictor::kIep: {
      EpOptions opts = cfg.ep;
      opts.mode = p == Predictor::kEp ? EpMode::kFull : EpMode::kIndependent;
      EpResult r = run_ep(train, theta, opts, warm);
      const auto preds = predict(r, train.X, Xtest);
      for (Eigen::Index j = 0; j < m; ++j) {
        out.probs.row(j) = preds[static_cast<std::size_t>(j)].probs.transpose();
        out.flagged = out.flagged || preds[static_cast<std::size_t>(j)].monte_carlo_fallback;
      }
      out.log_evidence = r.log_z;
      out.trace = r.diagnostics.trace;
      out.flagged = out.flagged || !r.diagnostics.converged;
      if (sites_out) *sites_out = std::move(r.sites);
      break;
    }
    case Predictor::kLa:
    case Predictor::kLaTkp: {
      const LaplaceState st = fit_laplace(train, theta);
      out.log_evidence = st.log_marginal;
      out.flagged = !st.converged;
      for (Eigen::Index j = 0; j < m; ++j) {
        const Vec x = Xtest.row(j).transpose();
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(j);
        if (p == Predictor::kLa) {
          out.probs.row(j) = la_predict(st, train.X, theta, x, seed).transpose();
        } else {
          const TkpPrediction t = la_tkp_predict(train, theta, st, x, cfg.tkp_warm_start, {}, seed);
          out.probs.row(j) = t.probs.transpose();
          out.flagged = out.flagged || t.fallback;
        }
      }
      break;
    }
    case Predictor::kGibbs: {
      GibbsOptions g = cfg.gibbs;
      g.seed = cfg.seed + 1;
      const GibbsResult r = run_gibbs(train, theta, g);
      out.probs = gibbs_predict(r, train.X, Xtest, cfg.seed + 2);
      break;
    }
    case Predictor::kUniform:
      out.probs.setConstant(1.0 / c);
      break;
  }
  return out;
}

Hyperparams select_hyperparams(Predictor p, const LabeledDataset& train, const RunConfig& cfg) {
  if (cfg.fixed_theta) return *cfg.fixed_theta;
  if (p == Predictor::kUniform) return Hyperparams(0.0, 0.0);
  return optimize_multistart(train, selection_method(p), cfg.ard, cfg.optimize).theta;
}

double mean_log_predictive(const Mat& probs, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < probs.rows(); ++j)
    total += std::log(std::max(probs(j, labels[static_cast<std::size_t>(j)]), 1e-300));
  return total / static_cast<double>(probs.rows());
}

double accuracy(const Mat& probs, const std::vector<int>& labels) {
  double hits = 0.0;
  for (Eigen::Index j = 0; j < probs.rows(); ++j) {
    Eigen::Index best = 0;
    probs.row(j).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(j)]) hits += 1.0;
  }
  return hits / static_cast<double>(probs.rows());
}

Interval bayesian_bootstrap(const std::vector<double>& values, int replicates, std::uint64_t seed) {
  Interval out;
  if (values.empty()) {
    out.point = out.lower = out.upper = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  out.point = sum / static_cast<double>(values.size());
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> means(static_cast<std::size_t>(replicates));
  for (double& mean : means) {
    double wsum = 0.0;
    double acc = 0.0;
    for (double v : values) {
      const double w = expo(rng);
      wsum += w;
      acc += w * v;
    }
    mean = acc / wsum;
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  out.lower = std::min(quantile(0.025), out.point);
  out.upper = std::max(quantile(0.975), out.point);
  return out;
}

namespace {

struct Accumulator {
  std::map<std::size_t, double> log_p;  // by dataset row
  std::map<std::size_t, double> hit;
};

void evaluate_split(const LabeledDataset& train_raw, const LabeledDataset& test_raw,
                    const std::vector<std::size_t>& test_rows, int fold, const std::vector<Predictor>& methods,
                    const RunConfig& cfg, std::vector<Accumulator>& acc, RunReport& report) {
  const Standardizer st = Standardizer::fit(train_raw.X);
  LabeledDataset train = train_raw;
  LabeledDataset test = test_raw;
  train.X = st.apply(train_raw.X);
  test.X = st.apply(test_raw.X);

  std::map<Method, Hyperparams> chosen;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodReport& mr = report.methods[mi];
    const auto start = std::chrono::steady_clock::now();
    try {
      Hyperparams theta(0.0, 0.0);
      if (methods[mi] != Predictor::kUniform) {
        const Method sel = selection_method(methods[mi]);
        auto it = chosen.find(sel);
        if (it == chosen.end()) it = chosen.emplace(sel, select_hyperparams(methods[mi], train, cfg)).first;
        theta = it->second;
      }
      const FitPredict fp = fit_predict(methods[mi], train, theta, test.X, cfg);
      for (Eigen::Index j = 0; j < fp.probs.rows(); ++j) {
        const std::size_t row = test_rows[static_cast<std::size_t>(j)];
        const int y = test.y[static_cast<std::size_t>(j)];
        acc[mi].log_p[row] = std::log(std::max(fp.probs(j, y), 1e-300));
        Eigen::Index best = 0;
        fp.probs.row(j).maxCoeff(&best);
        acc[mi].hit[row] = best == y ? 1.0 : 0.0;
      }
      mr.fold_theta.push_back(theta);
      mr.fold_traces.push_back(fp.trace);
    } catch (const std::exception&) {
      mr.failed_folds.push_back(fold);
      report.partial = true;
    }
    mr.fold_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
}

std::vector<double> values_of(const std::map<std::size_t, double>& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& [row, v] : m) out.push_back(v);
  return out;
}

void finalize(const std::vector<Predictor>& methods, const RunConfig& cfg, const std::vector<Accumulator>& acc,
              RunReport& report) {
  std::size_t ref = methods.size();
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    if (methods[mi] == Predictor::kEp) ref = mi;
  report.reference = ref < methods.size() ? "ep" : "";
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodReport& mr = report.methods[mi];
    const std::uint64_t seed = cfg.seed + 7919 * (mi + 1);
    mr.n_test = acc[mi].log_p.size();
    mr.mlpd = bayesian_bootstrap(values_of(acc[mi].log_p), cfg.bootstrap_replicates, seed);
    mr.accuracy = bayesian_bootstrap(values_of(acc[mi].hit), cfg.bootstrap_replicates, seed + 1);
    if (ref < methods.size() && ref != mi) {
      std::vector<double> diff;
      for (const auto& [row, v] : acc[mi].log_p) {
        auto it = acc[ref].log_p.find(row);
        if (it != acc[ref].log_p.end()) diff.push_back(v - it->second);
      }
      if (!diff.empty()) mr.lpd_difference = bayesian_bootstrap(diff, cfg.bootstrap_replicates, seed + 2);
    }
  }
}

RunReport empty_report(const std::vector<std::string>& labels, const std::vector<Predictor>& methods, int folds,
                       std::uint64_t seed) {
  RunReport report;
  report.label_names = labels;
  report.folds = folds;
  report.seed = seed;
  for (Predictor p : methods) {
    MethodReport mr;
    mr.name = predictor_name(p);
    report.methods.push_back(mr);
  }
  return report;
}

}  // namespace

RunReport cv_run(const IngestedData& dataset, int folds, const std::vector<Predictor>& methods,
                 const RunConfig& cfg) {
  const LabeledDataset& data = dataset.data;
  data.validate();
  const std::vector<int> assignment = stratified_folds(data.y, data.num_classes, folds, cfg.seed);
  RunReport report = empty_report(dataset.label_names, methods, folds, cfg.seed);
  std::vector<Accumulator> acc(methods.size());
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == f ? test_rows : train_rows).push_back(i);
    if (test_rows.empty()) continue;
    evaluate_split(data.subset(train_rows), data.subset(test_rows), test_rows, f, methods, cfg, acc, report);
  }
  finalize(methods, cfg, acc, report);
  return report;
}

RunReport holdout_run(const IngestedData& train, const LabeledDataset& test, const std::vector<Predictor>& methods,
                      const RunConfig& cfg) {
  train.data.validate();
  RunReport report = empty_report(train.label_names, methods, 1, cfg.seed);
  std::vector<Accumulator> acc(methods.size());
  std::vector<std::size_t> rows(static_cast<std::size_t>(test.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  evaluate_split(train.data, test, rows, 0, methods, cfg, acc, report);
  finalize(methods, cfg, acc, report);
  return report;
}

void write_report(std::ostream& out, const RunReport& report, bool include_timings) {
  using nlohmann::ordered_json;
  auto interval = [](const Interval& iv) {
    return ordered_json{{"point", iv.point}, {"lower", iv.lower}, {"upper", iv.upper}};
  };
  ordered_json j;
  j["labels"] = report.label_names;
  j["folds"] = report.folds;
  j["seed"] = report.seed;
  j["reference"] = report.reference;
  j["partial"] = report.partial;
  ordered_json methods = ordered_json::array();
  for (const MethodReport& mr : report.methods) {
    ordered_json m;
    m["method"] = mr.name;
    m["n_test"] = mr.n_test;
    m["mlpd"] = interval(mr.mlpd);
    m["accuracy"] = interval(mr.accuracy);
    if (mr.lpd_difference) m["lpd_difference_vs_reference"] = interval(*mr.lpd_difference);
    m["failed_folds"] = mr.failed_folds;
    ordered_json thetas = ordered_json::array();
    for (const Hyperparams& t : mr.fold_theta) {
      std::vector<double> ls(t.log_lengthscales.data(), t.log_lengthscales.data() + t.log_lengthscales.size());
      thetas.push_back({{"log_magnitude", t.log_magnitude}, {"log_lengthscales", ls}});
    }
    m["hyperparameters"] = thetas;
    ordered_json traces = ordered_json::array();
    for (const auto& trace : mr.fold_traces) {
      ordered_json tr = ordered_json::array();
      for (const SweepRecord& r : trace)
        tr.push_back({{"sweep", r.sweep},
                      {"log_z", r.log_z},
                      {"max_site_delta", r.max_site_delta},
                      {"skipped_sites", r.skipped_sites},
                      {"damping", r.damping}});
      traces.push_back(tr);
    }
    m["convergence_traces"] = traces;
    if (include_timings) m["fold_seconds"] = mr.fold_seconds;
    methods.push_back(m);
  }
  j["methods"] = methods;
  out << j.dump(2) << '\n';
}

std::vector<double> GridAxis::values() const {
  std::vector<double> out;
  if (steps <= 1) return {min};
  for (int s = 0; s < steps; ++s) out.push_back(min + (max - min) * s / static_cast<double>(steps - 1));
  return out;
}

std::pair<GridAxis, GridAxis> parse_grid(const std::string& spec) {
  auto parse_axis = [](const std::string& text) {
    GridAxis a;
    char sep1 = 0;
    char sep2 = 0;
    std::istringstream in(text);
    if (!(in >> a.min >> sep1 >> a.max >> sep2 >> a.steps) || sep1 != ':' || sep2 != ':' || a.steps < 1)
      throw std::invalid_argument("malformed grid axis '" + text + "', expected min:max:steps");
    return a;
  };
  const auto comma = spec.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("grid needs two axes separated by ','");
  return {parse_axis(spec.substr(0, comma)), parse_axis(spec.substr(comma + 1))};
}

std::vector<GridRow> grid_sweep(const LabeledDataset& train_raw, const LabeledDataset& test_raw,
                                const GridAxis& lengthscale, const GridAxis& magnitude,
                                const std::vector<Predictor>& methods, const RunConfig& cfg, bool warm_start) {
  const Standardizer st = Standardizer::fit(train_raw.X);
  LabeledDataset train = train_raw;
  LabeledDataset test = test_raw;
  train.X = st.apply(train_raw.X);
  test.X = st.apply(test_raw.X);

  std::vector<GridRow> rows;
  for (Predictor p : methods) {
    std::optional<EpSites> sites;
    for (double ll : lengthscale.values()) {
      for (double lm : magnitude.values()) {
        GridRow row;
        row.method = predictor_name(p);
        row.log_magnitude = lm;
        row.log_lengthscale = ll;
        try {
          const Hyperparams theta(lm, Vec::Constant(cfg.ard ? train.dim() : 1, ll));
          EpSites next;
          const FitPredict fp =
              fit_predict(p, train, theta, test.X, cfg, (warm_start && sites) ? &*sites : nullptr, &next);
          if (p == Predictor::kEp || p == Predictor::kIep) sites = std::move(next);
          row.log_evidence = fp.log_evidence;
          row.mlpd = mean_log_predictive(fp.probs, test.y);
          row.accuracy = accuracy(fp.probs, test.y);
        } catch (const std::exception&) {
          sites.reset();
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_grid(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "method\tlog_magnitude\tlog_lengthscale\tlog_evidence\tmlpd\taccuracy\n";
  char buf[256];
  for (const GridRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s\t%.6f\t%.6f\t%.10g\t%.10g\t%.10g\n", r.method.c_str(), r.log_magnitude,
                  r.log_lengthscale, r.log_evidence, r.mlpd, r.accuracy);
    out << buf;
  }
}

}  // namespace mpgp
