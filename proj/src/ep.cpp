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

#include "mpgp/ep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mpgp {

void EpOptions::validate() const {
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  if (!(outer_tol > 0.0)) throw std::invalid_argument("outer tolerance must be positive");
  if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
}

EpSites EpSites::zeros(Eigen::Index n, int num_classes) {
  EpSites s;
  s.inner.assign(static_cast<std::size_t>(n), SiteState::zeros(num_classes));
  s.diag_precision = Mat::Zero(num_classes, n);
  s.diag_location = Mat::Zero(num_classes, n);
  return s;
}

namespace {

double log_det_spd(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::string describe(const Hyperparams& theta) {
  std::ostringstream out;
  out << "log_magnitude=" << theta.log_magnitude << " log_lengthscales=[" << theta.log_lengthscales.transpose()
      << "]";
  return out.str();
}

// Sign changes of log Z differences larger than the tolerance; changes
// below it are rounding noise near a fixed point.
bool oscillating(const std::vector<SweepRecord>& trace, double tol) {
  if (trace.size() < 6) return false;
  int flips = 0;
  double prev = 0.0;
  for (std::size_t t = trace.size() - 5; t < trace.size(); ++t) {
    const double diff = trace[t].log_z - trace[t - 1].log_z;
    if (std::abs(diff) < tol) continue;
    if (diff * prev < 0.0) ++flips;
    prev = diff;
  }
  return flips >= 3;
}

}  // namespace

StructuredPosterior refresh_posterior(const Mat& K, const std::vector<int>& labels,
                                      const EpSites& sites, EpMode mode) {
  if (mode == EpMode::kIndependent)
    return StructuredPosterior(K, sites.diag_precision, sites.diag_location, false);
  const Eigen::Index n = K.rows();
  const int c = static_cast<int>(sites.inner.front().tau.size()) + 1;
  Mat precision(c, n);
  Mat location(c, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SiteState& s = sites.inner[static_cast<std::size_t>(i)];
    const int y = labels[static_cast<std::size_t>(i)];
    precision.col(i) = site_precision(s.tau, y).pi;
    location.col(i) = site_location(s.tau, s.nu, y);
  }
  return StructuredPosterior(K, std::move(precision), std::move(location), true);
}

Cavity cavity(const StructuredPosterior& post, const std::vector<int>& labels, const EpSites& sites,
              EpMode mode, Eigen::Index i) {
  const int c = post.num_classes();
  const Mat& S = post.marginal_cov(i);
  const Vec mu = post.marginal_mean(i);
  Cavity cav;
  if (mode == EpMode::kIndependent) {
    cav.precision = Mat::Zero(c, c);
    Vec eta(c);
    for (int k = 0; k < c; ++k) {
      const double lam = 1.0 / S(k, k) - sites.diag_precision(k, i);
      if (!(lam > 0.0) || !std::isfinite(lam)) return cav;
      cav.precision(k, k) = lam;
      eta(k) = mu(k) / S(k, k) - sites.diag_location(k, i);
    }
    cav.cov = cav.precision.diagonal().cwiseInverse().asDiagonal();
    cav.mean = cav.cov * eta;
    cav.valid = true;
    return cav;
  }
  Eigen::LLT<Mat> marg(S);
  if (marg.info() != Eigen::Success) return cav;
  const Mat Lambda = marg.solve(Mat::Identity(c, c));
  const SiteState& s = sites.inner[static_cast<std::size_t>(i)];
  const int y = labels[static_cast<std::size_t>(i)];
  cav.precision = Lambda - site_precision(s.tau, y).Pi;
  cav.precision = 0.5 * (cav.precision + cav.precision.transpose()).eval();
  Eigen::LLT<Mat> llt(cav.precision);
  if (llt.info() != Eigen::Success) return cav;
  cav.cov = llt.solve(Mat::Identity(c, c));
  cav.mean = cav.cov * (Lambda * mu - site_location(s.tau, s.nu, y));
  cav.valid = cav.cov.allFinite() && cav.mean.allFinite();
  return cav;
}

double log_marginal(const StructuredPosterior& post, const std::vector<int>& labels, const EpSites& sites,
                    EpMode mode) {
  double total = 0.5 * post.location().cwiseProduct(post.mean()).sum() - 0.5 * post.log_det();
  for (Eigen::Index i = 0; i < post.size(); ++i) {
    const Cavity cav = cavity(post, labels, sites, mode, i);
    if (!cav.valid) return std::numeric_limits<double>::quiet_NaN();
    const int y = labels[static_cast<std::size_t>(i)];
    total += tilted_log_z(cav.mean, cav.cov, y, sites.inner[static_cast<std::size_t>(i)]);

    Eigen::LLT<Mat> cav_llt(cav.precision);
    total += 0.5 * (cav.mean.dot(cav.precision * cav.mean) - log_det_spd(cav_llt));

    const Mat& S = post.marginal_cov(i);
    const Vec mu = post.marginal_mean(i);
    Eigen::LLT<Mat> marg_llt(S);
    if (marg_llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    total -= 0.5 * (mu.dot(marg_llt.solve(mu)) + log_det_spd(marg_llt));
  }
  return total;
}

EpResult run_ep(const LabeledDataset& data, const Hyperparams& theta, const EpOptions& opts,
                const EpSites* warm_start) {
  data.validate();
  opts.validate();
  theta.validate(data.dim());
  const Eigen::Index n = data.size();
  const int c = data.num_classes;
  const Mat K = prior_covariance(data.X, theta);

  EpResult res;
  res.theta = theta;
  res.labels = data.y;
  res.mode = opts.mode;
  res.sites = warm_start ? *warm_start : EpSites::zeros(n, c);
  if (static_cast<Eigen::Index>(res.sites.inner.size()) != n)
    throw std::invalid_argument("warm-start sites do not match the dataset");

  auto refresh = [&](const EpSites& sites) {
    try {
      return refresh_posterior(K, data.y, sites, opts.mode);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at " + describe(theta));
    }
  };

  res.posterior = refresh(res.sites);
  double prev_log_z = log_marginal(res.posterior, data.y, res.sites, opts.mode);
  double damping = opts.damping;
  const bool standard = opts.inner_mode == InnerMode::kStandard;

  for (int sweep = 1; sweep <= opts.max_outer; ++sweep) {
    EpSites next = res.sites;
    SweepRecord rec;
    rec.sweep = sweep;
    rec.damping = damping;
    // Every site update reads the same posterior; results are applied together.
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const Cavity cav = cavity(res.posterior, data.y, res.sites, opts.mode, i);
      if (!cav.valid) {
        ++rec.skipped_sites;
        res.diagnostics.skipped_observations.push_back(i);
        continue;
      }
      const SiteState& old = res.sites.inner[si];
      InnerOptions inner;
      inner.tol = opts.inner_tol;
      inner.max_sweeps = opts.inner_max_sweeps;
      inner.sweeps = standard ? 0 : 1;
      inner.damping = (opts.mode == EpMode::kFull && !standard) ? damping : 1.0;

      InnerResult r;
      try {
        r = tilted_moments(cav.mean, cav.cov, data.y[si], old, inner);
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << "observation " << i << ": " << e.what();
        throw NumericalError(msg.str());
      }
      rec.inner_sweeps += r.sweeps_run;

      if (opts.mode == EpMode::kFull) {
        SiteState& upd = next.inner[si];
        if (standard) {
          upd.tau = (old.tau + damping * (r.sites.tau - old.tau)).cwiseMax(0.0);
          upd.nu = old.nu + damping * (r.sites.nu - old.nu);
        } else {
          upd = r.sites;
        }
        rec.max_site_delta = std::max({rec.max_site_delta, (upd.tau - old.tau).cwiseAbs().maxCoeff(),
                                       (upd.nu - old.nu).cwiseAbs().maxCoeff()});
      } else {
        next.inner[si] = r.sites;
        const Vec var_hat = r.tilted.cov.diagonal();
        const Vec target_prec = (var_hat.cwiseInverse() - cav.precision.diagonal()).cwiseMax(0.0);
        const Vec target_loc =
            r.tilted.mean.cwiseQuotient(var_hat) - cav.precision.diagonal().cwiseProduct(cav.mean);
        const Vec old_prec = res.sites.diag_precision.col(i);
        const Vec old_loc = res.sites.diag_location.col(i);
        next.diag_precision.col(i) = (old_prec + damping * (target_prec - old_prec)).cwiseMax(0.0);
        next.diag_location.col(i) = old_loc + damping * (target_loc - old_loc);
        rec.max_site_delta =
            std::max({rec.max_site_delta, (next.diag_precision.col(i) - old_prec).cwiseAbs().maxCoeff(),
                      (next.diag_location.col(i) - old_loc).cwiseAbs().maxCoeff()});
      }
    }

    res.sites = std::move(next);
    res.posterior = refresh(res.sites);
    rec.log_z = log_marginal(res.posterior, data.y, res.sites, opts.mode);
    res.diagnostics.total_inner_sweeps += rec.inner_sweeps;
    res.diagnostics.trace.push_back(rec);

    if (rec.max_site_delta < opts.outer_tol && std::abs(rec.log_z - prev_log_z) < opts.outer_tol) {
      res.diagnostics.converged = true;
      break;
    }
    prev_log_z = rec.log_z;
    if (opts.auto_damping && damping > 0.5 && oscillating(res.diagnostics.trace, opts.outer_tol)) {
      damping = 0.5;
      res.diagnostics.damping_fallback = true;
    }
  }
  res.log_z = res.diagnostics.trace.empty() ? prev_log_z : res.diagnostics.trace.back().log_z;
  return res;
}

EvidenceGradient log_marginal_grad(const EpResult& result, const Mat& X) {
  const StructuredPosterior& post = result.posterior;
  const int c = post.num_classes();
  std::vector<Mat> M(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) M[static_cast<std::size_t>(k)] = post.M_block(k);
  const Mat& b = post.weights();

  EvidenceGradient out;
  out.approximate = !result.diagnostics.converged;
  out.grad = Vec::Zero(result.theta.num_params());
  for (Eigen::Index p = 0; p < out.grad.size(); ++p) {
    const Mat dK = prior_covariance_grad(X, result.theta, p);
    double g = 0.0;
    for (int k = 0; k < c; ++k) {
      const Vec bk = b.row(k).transpose();
      g += 0.5 * bk.dot(dK * bk) - 0.5 * M[static_cast<std::size_t>(k)].cwiseProduct(dK).sum();
    }
    out.grad(p) = g;
  }
  return out;
}

}  // namespace mpgp
