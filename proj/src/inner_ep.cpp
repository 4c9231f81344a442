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

#include "mpgp/inner_ep.hpp"

#include <algorithm>
#include <cmath>

#include "mpgp/normal.hpp"

namespace mpgp {

ProbitMoments probit_site_moments(double cavity_mean, double cavity_var) {
  if (!(cavity_var > 0.0)) throw std::invalid_argument("cavity variance must be positive");
  const double s = 1.0 / std::sqrt(1.0 + cavity_var);
  const double z = cavity_mean * s;
  const double rho = norm_pdf_cdf_ratio(z) * s;
  const double gamma = rho * rho + z * rho * s;
  ProbitMoments out;
  out.log_z_hat = log_norm_cdf(z);
  out.z_hat = std::exp(out.log_z_hat);
  out.mean = cavity_mean + rho * cavity_var;
  out.var = cavity_var - cavity_var * cavity_var * gamma;
  return out;
}

namespace {

// Gaussian over w = [f; u] carrying the current site approximations.
class AugmentedGaussian {
 public:
  AugmentedGaussian(const Vec& cavity_mean, const Mat& cavity_cov, int label)
      : c_(static_cast<int>(cavity_mean.size())), label_(label) {
    if (cavity_cov.rows() != c_ || cavity_cov.cols() != c_)
      throw std::invalid_argument("cavity covariance has wrong shape");
    if (label < 0 || label >= c_) throw std::invalid_argument("label out of range");
    cavity_chol_.compute(cavity_cov);
    if (cavity_chol_.info() != Eigen::Success) throw NumericalError("cavity covariance is not SPD");
    prior_mean_ = Vec::Zero(c_ + 1);
    prior_mean_.head(c_) = cavity_mean;
    prior_cov_ = Mat::Zero(c_ + 1, c_ + 1);
    prior_cov_.topLeftCorner(c_, c_) = cavity_cov;
    prior_cov_(c_, c_) = 1.0;
    mean_ = prior_mean_;
    cov_ = prior_cov_;
  }

  int num_sites() const { return c_ - 1; }

  // Class paired with site j.
  int site_class(int j) const { return j < label_ ? j : j + 1; }

  Vec projection(int j) const {
    Vec z = Vec::Zero(c_ + 1);
    z(label_) = 1.0;
    z(site_class(j)) = -1.0;
    z(c_) = 1.0;
    return z;
  }

  // Marginal (mean, variance) of w^T z_j.
  std::pair<double, double> marginal(int j) const {
    const Vec z = projection(j);
    return {z.dot(mean_), z.dot(cov_ * z)};
  }

  void rank_one_update(int j, double d_tau, double d_nu) {
    const Vec z = projection(j);
    const Vec theta = cov_ * z;
    const double v = z.dot(theta);
    const double m = z.dot(mean_);
    const double denom = 1.0 + d_tau * v;
    cov_.noalias() -= (d_tau / denom) * theta * theta.transpose();
    mean_ += theta * ((d_nu - d_tau * m) / denom);
  }

  void absorb(const SiteState& s) {
    for (int j = 0; j < num_sites(); ++j) {
      if (s.tau(j) != 0.0 || s.nu(j) != 0.0) rank_one_update(j, s.tau(j), s.nu(j));
    }
  }

  double log_normalizer(const SiteState& s) const {
    const int m = num_sites();
    double total = 0.0;
    // Per-site scale constants, recovered from each site's cavity.
    for (int j = 0; j < m; ++j) {
      const auto [mj, vj] = marginal(j);
      const double prec = 1.0 / vj - s.tau(j);
      if (!(prec > 0.0)) throw NumericalError("inner cavity variance is not positive");
      const double v_cav = 1.0 / prec;
      const double m_cav = v_cav * (mj / vj - s.nu(j));
      total += log_norm_cdf(m_cav / std::sqrt(1.0 + v_cav));
      total += 0.5 * std::log(v_cav / vj) + 0.5 * m_cav * m_cav / v_cav - 0.5 * mj * mj / vj;
    }
    // Gaussian integral of the cavity against all sites.
    Mat Z(c_ + 1, m);
    for (int j = 0; j < m; ++j) Z.col(j) = projection(j);
    const Vec sqrt_tau = s.tau.cwiseMax(0.0).cwiseSqrt();
    const Mat G = sqrt_tau.asDiagonal() * (Z.transpose() * prior_cov_ * Z) * sqrt_tau.asDiagonal();
    Eigen::LLT<Mat> llt(Mat::Identity(m, m) + G);
    if (llt.info() != Eigen::Success) throw NumericalError("inner site system is not SPD");
    const Mat& L = llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    Vec h = Z * s.nu;
    const Vec cav_mean = prior_mean_.head(c_);
    const Vec cav_nat = cavity_chol_.solve(cav_mean);
    h.head(c_) += cav_nat;
    total += 0.5 * (mean_.dot(h) - cav_mean.dot(cav_nat)) - 0.5 * log_det;
    return total;
  }

  TiltedResult moments(const SiteState& s) const {
    TiltedResult r;
    r.mean = mean_.head(c_);
    r.cov = cov_.topLeftCorner(c_, c_);
    r.cov = 0.5 * (r.cov + r.cov.transpose()).eval();
    Eigen::LLT<Mat> llt(r.cov);
    if (llt.info() != Eigen::Success) throw NumericalError("tilted covariance is not SPD");
    r.log_z = log_normalizer(s);
    return r;
  }

 private:
  int c_;
  int label_;
  Eigen::LLT<Mat> cavity_chol_;
  Vec prior_mean_;
  Mat prior_cov_;
  Vec mean_;
  Mat cov_;
};

}  // namespace

InnerResult tilted_moments(const Vec& cavity_mean, const Mat& cavity_cov, int label,
                           const SiteState& init, const InnerOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("damping must lie in (0, 1]");
  AugmentedGaussian q(cavity_mean, cavity_cov, label);
  const int m = q.num_sites();
  if (init.tau.size() != m || init.nu.size() != m)
    throw std::invalid_argument("site state has wrong length");

  InnerResult out;
  out.sites = init;
  q.absorb(out.sites);

  const int max_sweeps = opts.sweeps > 0 ? opts.sweeps : opts.max_sweeps;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < m; ++j) {
      const auto [mj, vj] = q.marginal(j);
      const double prec = 1.0 / vj - out.sites.tau(j);
      if (!(prec > 0.0) || !std::isfinite(prec)) {
        ++out.skipped_updates;
        continue;
      }
      const double v_cav = 1.0 / prec;
      const double m_cav = v_cav * (mj / vj - out.sites.nu(j));
      const ProbitMoments pm = probit_site_moments(m_cav, v_cav);
      double d_tau = opts.damping * (1.0 / pm.var - 1.0 / vj);
      const double d_nu = opts.damping * (pm.mean / pm.var - mj / vj);
      if (out.sites.tau(j) + d_tau < 0.0) d_tau = -out.sites.tau(j);
      out.sites.tau(j) += d_tau;
      out.sites.nu(j) += d_nu;
      q.rank_one_update(j, d_tau, d_nu);
      max_change = std::max({max_change, std::abs(d_tau), std::abs(d_nu)});
    }
    ++out.sweeps_run;
    if (max_change < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.tilted = q.moments(out.sites);
  return out;
}

double tilted_log_z(const Vec& cavity_mean, const Mat& cavity_cov, int label,
                    const SiteState& sites) {
  AugmentedGaussian q(cavity_mean, cavity_cov, label);
  q.absorb(sites);
  return q.log_normalizer(sites);
}

}  // namespace mpgp
