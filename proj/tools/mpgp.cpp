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

// Command-line front end: ingestion checks, training and prediction,
// cross-validated comparisons, evidence grids and Gibbs oracle runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpgp/data.hpp"
#include "mpgp/evaluation.hpp"
#include "mpgp/gibbs.hpp"
#include "mpgp/hyperopt.hpp"

using namespace mpgp;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct Common {
  std::string data;
  std::string labels = "label";
  std::string delimiter = ",";
  std::string out;
  std::uint64_t seed = 0;
  double damping = 0.8;
  double tol = 1e-6;
  int max_outer = 100;
  bool timings = false;
  bool ard = false;
  std::optional<double> log_magnitude;
  std::vector<double> log_lengthscale;
  std::vector<std::string> methods;

  char delim() const {
    if (delimiter == "\\t" || delimiter == "tab") return '\t';
    if (delimiter.size() != 1) throw std::invalid_argument("delimiter must be a single character");
    return delimiter[0];
  }

  RunConfig config() const {
    RunConfig cfg;
    cfg.ep.damping = damping;
    cfg.ep.outer_tol = tol;
    cfg.ep.max_outer = max_outer;
    cfg.ep.validate();
    cfg.seed = seed;
    cfg.ard = ard;
    if (log_magnitude || !log_lengthscale.empty()) {
      if (!log_magnitude || log_lengthscale.empty())
        throw std::invalid_argument("fixed hyperparameters need both --log-magnitude and --log-lengthscale");
      cfg.fixed_theta = Hyperparams(*log_magnitude, Eigen::Map<const Vec>(log_lengthscale.data(),
                                                                          static_cast<Eigen::Index>(log_lengthscale.size())));
    }
    return cfg;
  }

  std::vector<Predictor> predictors() const {
    std::vector<Predictor> out;
    for (const std::string& m : methods) out.push_back(parse_predictor(m));
    return out;
  }
};

void add_data_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--data", c.data, "Delimiter-separated input with a header row")->required();
  cmd->add_option("--labels", c.labels, "Name of the class label column")->capture_default_str();
  cmd->add_option("--delimiter", c.delimiter, "Field delimiter (use \\t for tabs)")->capture_default_str();
}

void add_inference_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for folds, Monte Carlo and chains")->capture_default_str();
  cmd->add_option("--damping", c.damping, "EP damping in (0, 1]")->capture_default_str();
  cmd->add_option("--tol", c.tol, "EP outer convergence tolerance")->capture_default_str();
  cmd->add_option("--max-outer", c.max_outer, "Maximum number of outer EP sweeps")->capture_default_str();
  cmd->add_option("--log-magnitude", c.log_magnitude, "Fix log sigma^2 instead of optimizing");
  cmd->add_option("--log-lengthscale", c.log_lengthscale, "Fix the log lengthscale(s) instead of optimizing")
      ->delimiter(',');
  cmd->add_flag("--ard", c.ard, "One lengthscale per input dimension");
}

void add_output_option(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output file (default: standard output)");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

IngestedData load(const Common& c) {
  IngestedData d = ingest_file(c.data, c.labels, c.delim());
  const Standardizer st = Standardizer::fit(d.data.X);
  for (Eigen::Index j : st.constant_columns)
    std::cerr << "warning: column '" << d.feature_names[static_cast<std::size_t>(j)]
              << "' is constant and is standardized to zero\n";
  return d;
}

LabeledDataset load_with_labels(const std::string& path, const Common& c, const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return ingest_with_labels(in, c.labels, c.delim(), names).data;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

ordered_json theta_json(const Hyperparams& t) {
  return {{"log_magnitude", t.log_magnitude}, {"log_lengthscales", to_std(t.log_lengthscales)}};
}

Hyperparams theta_from_json(const ordered_json& j) {
  const std::vector<double> ls = j.at("log_lengthscales").get<std::vector<double>>();
  return Hyperparams(j.at("log_magnitude").get<double>(),
                     Vec(Eigen::Map<const Vec>(ls.data(), static_cast<Eigen::Index>(ls.size()))));
}

ordered_json trace_json(const std::vector<SweepRecord>& trace) {
  ordered_json out = ordered_json::array();
  for (const SweepRecord& r : trace)
    out.push_back({{"sweep", r.sweep},
                   {"log_z", r.log_z},
                   {"max_site_delta", r.max_site_delta},
                   {"skipped_sites", r.skipped_sites},
                   {"damping", r.damping}});
  return out;
}

std::string format_row(const std::vector<double>& values) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.10g", i ? "\t" : "", values[i]);
    out += buf;
  }
  return out;
}

int run_ingest_check(const Common& c) {
  const IngestedData d = load(c);
  const Standardizer st = Standardizer::fit(d.data.X);
  ordered_json j;
  j["rows"] = d.data.size();
  j["features"] = d.feature_names;
  ordered_json classes = ordered_json::array();
  for (std::size_t k = 0; k < d.label_names.size(); ++k) {
    const auto count = std::count(d.data.y.begin(), d.data.y.end(), static_cast<int>(k));
    classes.push_back({{"label", d.label_names[k]}, {"index", k + 1}, {"count", count}});
  }
  j["classes"] = classes;
  std::vector<std::string> constant;
  for (Eigen::Index col : st.constant_columns) constant.push_back(d.feature_names[static_cast<std::size_t>(col)]);
  j["constant_columns"] = constant;
  j["mean"] = to_std(st.mean);
  j["scale"] = to_std(st.scale);
  emit(c.out, j.dump(2) + "\n");
  return kExitOk;
}

int run_train(const Common& c) {
  const IngestedData d = load(c);
  const Predictor p = parse_predictor(c.methods.front());
  if (p == Predictor::kUniform) throw std::invalid_argument("nothing to train for the uniform predictor");
  const RunConfig cfg = c.config();
  const Standardizer st = Standardizer::fit(d.data.X);
  LabeledDataset train = d.data;
  train.X = st.apply(d.data.X);

  std::optional<OptimizeResult> opt;
  Hyperparams theta;
  if (cfg.fixed_theta) {
    theta = *cfg.fixed_theta;
  } else {
    opt = optimize_multistart(train, selection_method(p), cfg.ard, cfg.optimize);
    theta = opt->theta;
  }
  const FitPredict fit = fit_predict(p, train, theta, Mat(0, train.dim()), cfg);

  ordered_json j;
  j["format"] = "mpgp-model";
  j["version"] = 1;
  j["method"] = predictor_name(p);
  j["label_column"] = c.labels;
  j["labels"] = d.label_names;
  j["features"] = d.feature_names;
  j["standardizer"] = {{"mean", to_std(st.mean)}, {"scale", to_std(st.scale)}};
  j["hyperparameters"] = theta_json(theta);
  if (opt) {
    j["map_objective"] = opt->value;
    j["optimizer_converged"] = opt->converged;
    j["optimizer_evaluations"] = opt->trace.size();
  }
  j["log_evidence"] = fit.log_evidence;
  j["flagged"] = fit.flagged;
  j["options"] = {{"seed", c.seed}, {"damping", c.damping}, {"tol", c.tol}, {"max_outer", c.max_outer}};
  ordered_json X = ordered_json::array();
  for (Eigen::Index i = 0; i < d.data.size(); ++i) X.push_back(to_std(d.data.X.row(i).transpose()));
  j["train"] = {{"X", X}, {"y", d.data.y}};
  j["convergence_trace"] = trace_json(fit.trace);
  emit(c.out, j.dump(2) + "\n");
  if (fit.flagged) std::cerr << "warning: inference did not converge; results are flagged\n";
  return fit.flagged ? kExitPartial : kExitOk;
}

int run_predict(const Common& c, const std::string& model_path) {
  std::ifstream in(model_path);
  if (!in) throw std::invalid_argument("cannot open model " + model_path);
  const ordered_json m = ordered_json::parse(in);
  if (m.value("format", "") != "mpgp-model") throw std::invalid_argument(model_path + " is not a model file");

  const Predictor p = parse_predictor(m.at("method").get<std::string>());
  const std::vector<std::string> labels = m.at("labels").get<std::vector<std::string>>();
  const std::vector<std::string> features = m.at("features").get<std::vector<std::string>>();
  const auto rows = m.at("train").at("X").get<std::vector<std::vector<double>>>();
  LabeledDataset train;
  train.num_classes = static_cast<int>(labels.size());
  train.y = m.at("train").at("y").get<std::vector<int>>();
  train.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < features.size(); ++k)
      train.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i].at(k);

  Standardizer st;
  const auto mean = m.at("standardizer").at("mean").get<std::vector<double>>();
  const auto scale = m.at("standardizer").at("scale").get<std::vector<double>>();
  st.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  st.scale = Eigen::Map<const Vec>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  train.X = st.apply(train.X);

  RunConfig cfg;
  const ordered_json& o = m.at("options");
  cfg.seed = o.at("seed").get<std::uint64_t>();
  cfg.ep.damping = o.at("damping").get<double>();
  cfg.ep.outer_tol = o.at("tol").get<double>();
  cfg.ep.max_outer = o.at("max_outer").get<int>();
  const Hyperparams theta = theta_from_json(m.at("hyperparameters"));

  std::ifstream data(c.data);
  if (!data) throw std::invalid_argument("cannot open " + c.data);
  const Mat Xtest = st.apply(read_features(data, features, c.delim()));
  const FitPredict fp = fit_predict(p, train, theta, Xtest, cfg);

  std::string text = "row\tpredicted";
  for (const std::string& l : labels) text += "\tp_" + l;
  text += '\n';
  for (Eigen::Index r = 0; r < fp.probs.rows(); ++r) {
    Eigen::Index best = 0;
    fp.probs.row(r).maxCoeff(&best);
    text += std::to_string(r + 1) + '\t' + labels[static_cast<std::size_t>(best)] + '\t' +
            format_row(to_std(fp.probs.row(r).transpose())) + '\n';
  }
  emit(c.out, text);
  return fp.flagged ? kExitPartial : kExitOk;
}

int run_cv(const Common& c, int folds, const std::string& test_path) {
  const IngestedData d = load(c);
  const RunConfig cfg = c.config();
  const std::vector<Predictor> methods = c.predictors();
  const RunReport report = test_path.empty() ? cv_run(d, folds, methods, cfg)
                                             : holdout_run(d, load_with_labels(test_path, c, d.label_names), methods, cfg);
  std::ostringstream out;
  write_report(out, report, c.timings);
  emit(c.out, out.str());
  return report.partial ? kExitPartial : kExitOk;
}

int run_grid(const Common& c, const std::string& grid, const std::string& test_path) {
  const IngestedData d = load(c);
  const auto [lengthscale, magnitude] = parse_grid(grid);
  RunConfig cfg = c.config();
  LabeledDataset train = d.data;
  LabeledDataset test;
  if (!test_path.empty()) {
    test = load_with_labels(test_path, c, d.label_names);
  } else {
    // Seeded stratified split: one third of each class is held out.
    const std::vector<int> fold = stratified_folds(d.data.y, d.data.num_classes, 3, c.seed);
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == 0 ? te : tr).push_back(i);
    train = d.data.subset(tr);
    test = d.data.subset(te);
  }
  const std::vector<GridRow> rows = grid_sweep(train, test, lengthscale, magnitude, c.predictors(), cfg);
  std::ostringstream out;
  write_grid(out, rows);
  emit(c.out, out.str());
  for (const GridRow& r : rows)
    if (std::isnan(r.mlpd)) return kExitPartial;
  return kExitOk;
}

int run_gibbs_oracle(const Common& c, const GibbsOptions& gopts, const std::string& test_path) {
  const IngestedData d = load(c);
  const RunConfig cfg = c.config();
  const Standardizer st = Standardizer::fit(d.data.X);
  LabeledDataset train = d.data;
  train.X = st.apply(d.data.X);
  const Hyperparams theta = select_hyperparams(Predictor::kGibbs, train, cfg);
  GibbsOptions g = gopts;
  g.seed = c.seed;
  const GibbsResult r = run_gibbs(train, theta, g);

  const int k = train.num_classes;
  std::string text = "# gibbs log_magnitude=" + format_row({theta.log_magnitude}) + " log_lengthscales=" +
                     format_row(to_std(theta.log_lengthscales)) + " samples=" + std::to_string(g.samples) +
                     " burn_in=" + std::to_string(g.burn_in) + " thin=" + std::to_string(g.thin) +
                     " seed=" + std::to_string(g.seed) + "\n";
  text += "set\trow\tlabel";
  for (const std::string& l : d.label_names) text += "\tmean_" + l;
  for (const std::string& l : d.label_names) text += "\tvar_" + l;
  for (const std::string& l : d.label_names) text += "\tp_" + l;
  text += '\n';
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    std::vector<double> v = to_std(r.summary.mean.col(i));
    for (int q = 0; q < k; ++q) v.push_back(r.summary.cov[static_cast<std::size_t>(i)](q, q));
    for (int q = 0; q < k; ++q) v.push_back(r.summary.train_probs(q, i));
    text += "train\t" + std::to_string(i + 1) + '\t' + d.label_names[static_cast<std::size_t>(train.y[static_cast<std::size_t>(i)])] +
            '\t' + format_row(v) + '\n';
  }
  if (!test_path.empty()) {
    const LabeledDataset test = load_with_labels(test_path, c, d.label_names);
    const Mat probs = gibbs_predict(r, train.X, st.apply(test.X), c.seed + 1);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      std::vector<double> v(2 * static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());
      const std::vector<double> p = to_std(probs.row(i).transpose());
      v.insert(v.end(), p.begin(), p.end());
      text += "test\t" + std::to_string(i + 1) + '\t' + d.label_names[static_cast<std::size_t>(test.y[static_cast<std::size_t>(i)])] +
              '\t' + format_row(v) + '\n';
    }
  }
  emit(c.out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiclass Gaussian process classification with nested expectation propagation"};
  app.require_subcommand(1);
  Common c;

  auto* ingest_cmd = app.add_subcommand("ingest-check", "Parse a table and summarize classes and columns");
  add_data_options(ingest_cmd, c);
  add_output_option(ingest_cmd, c);

  auto* train_cmd = app.add_subcommand("train", "Fit hyperparameters and write a model file");
  add_data_options(train_cmd, c);
  add_inference_options(train_cmd, c);
  add_output_option(train_cmd, c);
  std::string method = "ep";
  train_cmd->add_option("--method", method, "ep, iep, la, la-tkp or gibbs")->capture_default_str();

  auto* predict_cmd = app.add_subcommand("predict", "Class probabilities for new inputs from a model file");
  std::string model;
  predict_cmd->add_option("--model", model, "Model file written by train")->required();
  predict_cmd->add_option("--data", c.data, "Inputs to classify")->required();
  predict_cmd->add_option("--delimiter", c.delimiter, "Field delimiter")->capture_default_str();
  add_output_option(predict_cmd, c);

  int folds = 10;
  std::string test_path;
  auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation report");
  auto* compare_cmd = app.add_subcommand("compare", "Compare methods against EP on folds or a test file");
  for (auto* cmd : {cv_cmd, compare_cmd}) {
    add_data_options(cmd, c);
    add_inference_options(cmd, c);
    add_output_option(cmd, c);
    cmd->add_option("--folds", folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000000));
    cmd->add_flag("--timings", c.timings, "Include wall-clock timings in the report");
  }
  cv_cmd->add_option("--method", c.methods, "Methods to evaluate (comma-separated)")->delimiter(',');
  compare_cmd->add_option("--method", c.methods, "Methods to compare (comma-separated)")->delimiter(',');
  compare_cmd->add_option("--test", test_path, "Held-out test file instead of folds");

  std::string grid;
  auto* grid_cmd = app.add_subcommand("grid", "Evidence and test metrics over a hyperparameter grid");
  add_data_options(grid_cmd, c);
  add_inference_options(grid_cmd, c);
  add_output_option(grid_cmd, c);
  grid_cmd->add_option("--grid", grid, "lmin:lmax:steps,smin:smax:steps over log lengthscale and log sigma^2")
      ->required();
  grid_cmd->add_option("--method", c.methods, "Methods to evaluate (comma-separated)")->delimiter(',');
  grid_cmd->add_option("--test", test_path, "Held-out test file (default: seeded one-third split)");

  GibbsOptions gopts;
  auto* gibbs_cmd = app.add_subcommand("gibbs", "Gibbs sampling reference run at fixed hyperparameters");
  add_data_options(gibbs_cmd, c);
  add_inference_options(gibbs_cmd, c);
  add_output_option(gibbs_cmd, c);
  gibbs_cmd->add_option("--samples", gopts.samples, "Retained draws")->capture_default_str();
  gibbs_cmd->add_option("--burn-in", gopts.burn_in, "Discarded initial iterations")->capture_default_str();
  gibbs_cmd->add_option("--thin", gopts.thin, "Keep every thin-th iteration")->capture_default_str();
  gibbs_cmd->add_option("--test", test_path, "Test file for predictive probabilities");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*ingest_cmd) return run_ingest_check(c);
    if (*train_cmd) {
      c.methods = {method};
      return run_train(c);
    }
    if (*predict_cmd) return run_predict(c, model);
    if (c.methods.empty()) c.methods = *compare_cmd ? std::vector<std::string>{"ep", "iep", "la", "la-tkp"}
                                                    : std::vector<std::string>{"ep"};
    if (*cv_cmd) return run_cv(c, folds, "");
    if (*compare_cmd) return run_cv(c, folds, test_path);
    if (*grid_cmd) return run_grid(c, grid, test_path);
    if (*gibbs_cmd) return run_gibbs_oracle(c, gopts, test_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
