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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "mpgp/evaluation.hpp"
#include "synthetic.hpp"

using namespace mpgp;

namespace {

IngestedData wrap(const LabeledDataset& d) {
  IngestedData out;
  out.data = d;
  for (int k = 0; k < d.num_classes; ++k) out.label_names.push_back("class" + std::to_string(k));
  for (Eigen::Index j = 0; j < d.dim(); ++j) out.feature_names.push_back("x" + std::to_string(j));
  return out;
}

std::string report_text(const RunReport& r) {
  std::ostringstream out;
  write_report(out, r, false);
  return out.str();
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("uniform predictor scores log(1/c)") {
    const LabeledDataset d = synthetic::blobs(20, 4, 2, 2.0, 1);
    RunConfig cfg;
    cfg.bootstrap_replicates = 200;
    const RunReport r = cv_run(wrap(d), 4, {Predictor::kUniform}, cfg);
    CHECK(r.methods[0].mlpd.point == std::log(0.25));
    CHECK(r.methods[0].mlpd.lower == doctest::Approx(std::log(0.25)).epsilon(1e-14));
    CHECK(r.methods[0].mlpd.upper == doctest::Approx(std::log(0.25)).epsilon(1e-14));
    CHECK(r.methods[0].n_test == 20u);
    const Mat probs = Mat::Constant(3, 4, 0.25);
    CHECK(mean_log_predictive(probs, {0, 1, 3}) == std::log(0.25));
  }

  TEST_CASE("metrics") {
    Mat probs(3, 2);
    probs << 0.9, 0.1, 0.4, 0.6, 0.3, 0.7;
    CHECK(accuracy(probs, {0, 1, 0}) == doctest::Approx(2.0 / 3.0));
    CHECK(mean_log_predictive(probs, {0, 1, 0}) == doctest::Approx((std::log(0.9) + std::log(0.6) + std::log(0.3)) / 3));
  }

  TEST_CASE("bayesian bootstrap") {
    const std::vector<double> v = {0.1, 0.5, -0.3, 2.0, 0.7, 0.2};
    const Interval iv = bayesian_bootstrap(v, 10000, 4);
    CHECK(iv.point == doctest::Approx(3.2 / 6.0));
    CHECK(iv.lower <= iv.point);
    CHECK(iv.point <= iv.upper);
    CHECK(iv.upper - iv.lower > 0.1);
    const Interval again = bayesian_bootstrap(v, 10000, 4);
    CHECK(again.lower == iv.lower);
    CHECK(again.upper == iv.upper);
    const Interval flat = bayesian_bootstrap({1.0, 1.0, 1.0}, 100, 1);
    CHECK(flat.lower == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(flat.upper == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("separable data is classified perfectly") {
    const LabeledDataset d = synthetic::blobs(30, 3, 2, 8.0, 2);
    RunConfig cfg;
    cfg.bootstrap_replicates = 500;
    const RunReport r = cv_run(wrap(d), 3, {Predictor::kEp}, cfg);
    CHECK_FALSE(r.partial);
    CHECK(r.methods[0].accuracy.point == 1.0);
    CHECK(r.methods[0].fold_theta.size() == 3u);
  }

  TEST_CASE("reports are reproducible and carry labels") {
    const LabeledDataset d = synthetic::three_class_1d(6, 4);
    RunConfig cfg;
    cfg.bootstrap_replicates = 300;
    cfg.seed = 17;
    const std::vector<Predictor> methods = {Predictor::kEp, Predictor::kIep, Predictor::kLa};
    const RunReport a = cv_run(wrap(d), 3, methods, cfg);
    const RunReport b = cv_run(wrap(d), 3, methods, cfg);
    CHECK(report_text(a) == report_text(b));
    CHECK(report_text(a).find("\"class2\"") != std::string::npos);
    CHECK(report_text(a).find("fold_seconds") == std::string::npos);
    CHECK(a.reference == "ep");
    CHECK(a.methods[1].lpd_difference.has_value());
    CHECK_FALSE(a.methods[0].lpd_difference.has_value());
    for (const MethodReport& m : a.methods) {
      CHECK(m.accuracy.lower <= m.accuracy.point);
      CHECK(m.accuracy.point <= m.accuracy.upper);
      CHECK(m.accuracy.point >= 0.0);
      CHECK(m.accuracy.point <= 1.0);
    }
    std::ostringstream with;
    write_report(with, a, true);
    CHECK(with.str().find("fold_seconds") != std::string::npos);
  }

  TEST_CASE("test labels and inputs never reach hyperparameter selection") {
    const LabeledDataset train = synthetic::three_class_1d(6, 5);
    LabeledDataset test = synthetic::three_class_1d(4, 6);
    RunConfig cfg;
    cfg.bootstrap_replicates = 100;
    const RunReport a = holdout_run(wrap(train), test, {Predictor::kEp, Predictor::kLa}, cfg);
    std::reverse(test.y.begin(), test.y.end());
    test.X.array() += 5.0;
    const RunReport b = holdout_run(wrap(train), test, {Predictor::kEp, Predictor::kLa}, cfg);
    for (std::size_t m = 0; m < 2; ++m) {
      const Vec ta = a.methods[m].fold_theta.at(0).to_vector();
      const Vec tb = b.methods[m].fold_theta.at(0).to_vector();
      CHECK((ta.array() == tb.array()).all());
    }
  }

  TEST_CASE("failed methods are recorded") {
    const LabeledDataset d = synthetic::three_class_1d(4, 7);
    RunConfig cfg;
    cfg.bootstrap_replicates = 100;
    cfg.fixed_theta = Hyperparams(0.0, Vec::Zero(5));  // wrong lengthscale count
    const RunReport r = cv_run(wrap(d), 2, {Predictor::kEp, Predictor::kUniform}, cfg);
    CHECK(r.partial);
    CHECK(r.methods[0].failed_folds == std::vector<int>{0, 1});
    CHECK(r.methods[1].failed_folds.empty());
    CHECK(std::isnan(r.methods[0].mlpd.point));
  }

  TEST_CASE("grid parsing") {
    const auto [l, s] = parse_grid("-1:1:3,0:4:5");
    CHECK(l.values() == std::vector<double>{-1.0, 0.0, 1.0});
    CHECK(s.values().size() == 5u);
    CHECK(s.values().back() == 4.0);
    CHECK_THROWS_AS(parse_grid("1:2:3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("1:2,3:4:5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("1:2:0,3:4:5"), std::invalid_argument);
  }

  TEST_CASE("single grid node equals a direct fit") {
    const LabeledDataset train = synthetic::three_class_1d(6, 8);
    const LabeledDataset test = synthetic::three_class_1d(3, 9);
    RunConfig cfg;
    const std::vector<GridRow> rows =
        grid_sweep(train, test, GridAxis{0.3, 0.3, 1}, GridAxis{1.5, 1.5, 1}, {Predictor::kEp}, cfg);
    REQUIRE(rows.size() == 1u);
    const Standardizer st = Standardizer::fit(train.X);
    LabeledDataset tr = train;
    tr.X = st.apply(train.X);
    const FitPredict fp = fit_predict(Predictor::kEp, tr, Hyperparams(1.5, 0.3), st.apply(test.X), cfg);
    CHECK(rows[0].log_evidence == fp.log_evidence);
    CHECK(rows[0].mlpd == mean_log_predictive(fp.probs, test.y));
    CHECK(rows[0].accuracy == accuracy(fp.probs, test.y));
  }

  TEST_CASE("grid values do not depend on the sweep order") {
    const LabeledDataset train = synthetic::three_class_1d(6, 10);
    const LabeledDataset test = synthetic::three_class_1d(3, 11);
    RunConfig cfg;
    cfg.ep.outer_tol = 1e-9;
    cfg.ep.max_outer = 4000;
    const GridAxis l{-1.0, 1.0, 3}, s{0.0, 4.0, 3};
    const std::vector<Predictor> methods = {Predictor::kEp, Predictor::kIep};
    const std::vector<GridRow> warm = grid_sweep(train, test, l, s, methods, cfg, true);
    const std::vector<GridRow> cold = grid_sweep(train, test, l, s, methods, cfg, false);
    REQUIRE(warm.size() == 18u);
    for (std::size_t i = 0; i < warm.size(); ++i) {
      CHECK(std::abs(warm[i].log_evidence - cold[i].log_evidence) < 1e-6);
      CAPTURE(i);
      CHECK(std::abs(warm[i].mlpd - cold[i].mlpd) < 1e-6);
    }
    std::ostringstream out;
    write_grid(out, warm);
    CHECK(out.str().rfind("method\tlog_magnitude\tlog_lengthscale\tlog_evidence\tmlpd\taccuracy\n", 0) == 0);
  }
}
