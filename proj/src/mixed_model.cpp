#include "rankaudit/mixed_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "rankaudit/errors.hpp"

namespace rankaudit {

namespace {

// log(lambda) grid used to bracket the optimum before refining.
constexpr int kGridLo = -20;
constexpr int kGridHi = 20;

double log_det(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  return ldlt.vectorD().array().log().sum();
}

std::size_t coefficient_index(const MixedModelFit& fit, const std::string& name) {
  auto it = std::find(fit.coefficients.begin(), fit.coefficients.end(), name);
  if (it == fit.coefficients.end()) {
    throw Error(ErrorKind::CoefficientMissing, "fit has no coefficient '" + name + "'");
  }
  return static_cast<std::size_t>(it - fit.coefficients.begin());
}

}  // namespace

// ---------------------------------------------------------------------------
// MixedModelFit
// ---------------------------------------------------------------------------

double MixedModelFit::estimate(const std::string& coefficient) const {
  return beta(static_cast<Eigen::Index>(coefficient_index(*this, coefficient)));
}

double MixedModelFit::se(const std::string& coefficient) const {
  const auto i = static_cast<Eigen::Index>(coefficient_index(*this, coefficient));
  return std::sqrt(covariance(i, i));
}

std::map<std::string, double> MixedModelFit::estimates() const {
  std::map<std::string, double> out;
  for (const auto& name : coefficients) out[name] = estimate(name);
  return out;
}

std::map<std::string, double> MixedModelFit::standard_errors() const {
  std::map<std::string, double> out;
  for (const auto& name : coefficients) out[name] = se(name);
  return out;
}

// ---------------------------------------------------------------------------
// RandomInterceptModel
// ---------------------------------------------------------------------------

RandomInterceptModel::RandomInterceptModel(std::span<const LongObservation> data,
                                           std::vector<std::string> design)
    : design_(std::move(design)), n_obs_(data.size()) {
  const auto p = static_cast<Eigen::Index>(design_.size());
  if (p == 0) throw Error(ErrorKind::InvalidArgument, "fixed-effect design is empty");

  std::map<std::string, std::vector<const LongObservation*>> by_group;
  for (const auto& obs : data) {
    if (!std::isfinite(obs.response)) {
      throw Error(ErrorKind::InvalidArgument, "non-finite response in group '" + obs.group + "'");
    }
    by_group[obs.group].push_back(&obs);
  }
  if (by_group.size() < 2) {
    throw Error(ErrorKind::TooFewGroups,
                "need at least 2 groups, got " + std::to_string(by_group.size()));
  }
  if (n_obs_ < design_.size() + 2) {
    throw Error(ErrorKind::InvalidArgument, "need at least " + std::to_string(design_.size() + 2) +
                                                " observations, got " + std::to_string(n_obs_));
  }

  Eigen::MatrixXd full(static_cast<Eigen::Index>(n_obs_), p);
  Eigen::Index row = 0;
  groups_.reserve(by_group.size());
  for (const auto& [name, members] : by_group) {
    Group g;
    g.n = members.size();
    const auto n = static_cast<Eigen::Index>(g.n);
    g.x.resize(n, p);
    g.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& obs = *members[static_cast<std::size_t>(i)];
      g.y(i) = obs.response;
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto& column = design_[static_cast<std::size_t>(j)];
        if (column == kIntercept) {
          g.x(i, j) = 1.0;
          continue;
        }
        auto it = obs.covariates.find(column);
        if (it == obs.covariates.end() || !std::isfinite(it->second)) {
          throw Error(ErrorKind::InvalidArgument,
                      "observation in group '" + name + "' lacks covariate '" + column + "'");
        }
        g.x(i, j) = it->second;
      }
    }
    full.middleRows(row, n) = g.x;
    row += n;
    g.xtx = g.x.transpose() * g.x;
    g.xt1 = g.x.colwise().sum().transpose();
    g.xty = g.x.transpose() * g.y;
    g.sum_y = g.y.sum();
    groups_.push_back(std::move(g));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(full);
  if (qr.rank() < p) {
    throw Error(ErrorKind::RankDeficientDesign, "design matrix has rank " +
                                                    std::to_string(qr.rank()) + " < " +
                                                    std::to_string(p));
  }
}

bool RandomInterceptModel::variance_identifiable() const noexcept {
  return std::any_of(groups_.begin(), groups_.end(), [](const Group& g) { return g.n >= 2; });
}

RandomInterceptModel::Profile RandomInterceptModel::profile(double lambda) const {
  const auto p = static_cast<Eigen::Index>(design_.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Profile out;
  for (const auto& g : groups_) {
    const double n = static_cast<double>(g.n);
    const double w = lambda / (1.0 + lambda * n);
    a += g.xtx - w * g.xt1 * g.xt1.transpose();
    b += g.xty - w * g.sum_y * g.xt1;
    out.log_det_v += std::log1p(lambda * n);
  }
  out.a.compute(a);
  out.beta = out.a.solve(b);
  for (const auto& g : groups_) {
    const double w = lambda / (1.0 + lambda * static_cast<double>(g.n));
    const Eigen::VectorXd r = g.y - g.x * out.beta;
    const double s = r.sum();
    out.q += r.squaredNorm() - w * s * s;
  }
  return out;
}

double RandomInterceptModel::criterion(double lambda, Criterion c) const {
  const auto prof = profile(lambda);
  const double n = static_cast<double>(n_obs_);
  const double p = static_cast<double>(design_.size());
  const double two_pi = 2.0 * std::numbers::pi;
  if (c == Criterion::ML) {
    return n * (1.0 + std::log(two_pi * prof.q / n)) + prof.log_det_v;
  }
  const double dof = n - p;
  return dof * (1.0 + std::log(two_pi * prof.q / dof)) + prof.log_det_v + log_det(prof.a);
}

double RandomInterceptModel::derivative(double lambda, Criterion c) const {
  const auto prof = profile(lambda);
  double dq = 0.0;
  double dlog_v = 0.0;
  double dlog_a = 0.0;
  for (const auto& g : groups_) {
    const double n = static_cast<double>(g.n);
    const double scale = 1.0 / (1.0 + lambda * n);
    const Eigen::VectorXd r = g.y - g.x * prof.beta;
    const double s = r.sum() * scale;
    dq -= s * s;
    dlog_v += n * scale;
    if (c == Criterion::REML) {
      dlog_a -= g.xt1.dot(prof.a.solve(g.xt1)) * scale * scale;
    }
  }
  const double n = static_cast<double>(n_obs_);
  const double dof = c == Criterion::REML ? n - static_cast<double>(design_.size()) : n;
  return dof * dq / prof.q + dlog_v + dlog_a;
}

Eigen::VectorXd RandomInterceptModel::gls_beta(double lambda) const { return profile(lambda).beta; }

MixedModelFit RandomInterceptModel::finish(double lambda, Criterion c, bool converged) const {
  const auto prof = profile(lambda);
  const double n = static_cast<double>(n_obs_);
  const double dof = c == Criterion::REML ? n - static_cast<double>(design_.size()) : n;
  MixedModelFit fit;
  fit.coefficients = design_;
  fit.beta = prof.beta;
  fit.sigma2 = prof.q / dof;
  fit.lambda = lambda;
  fit.tau2 = lambda * fit.sigma2;
  const auto p = static_cast<Eigen::Index>(design_.size());
  fit.covariance = fit.sigma2 * prof.a.solve(Eigen::MatrixXd::Identity(p, p));
  fit.loglik = -0.5 * criterion(lambda, c);
  fit.converged = converged;
  fit.n_obs = n_obs_;
  fit.n_groups = groups_.size();
  fit.criterion = c;
  return fit;
}

MixedModelFit RandomInterceptModel::fit(const FitOptions& options) const {
  const Criterion c = options.criterion;
  if (!variance_identifiable()) {
    auto out = finish(0.0, c, true);
    out.warnings.push_back(
        "random-intercept variance not identifiable (one observation per group); tau2 reported as 0");
    return out;
  }

  // Bracket on a log-lambda grid, then refine on the derivative.
  std::vector<double> grid;
  for (int t = kGridLo; t <= kGridHi; ++t) grid.push_back(criterion(std::exp(t), c));
  const auto best = static_cast<int>(std::min_element(grid.begin(), grid.end()) - grid.begin());
  if (kGridLo + best == kGridHi) {
    throw Error(ErrorKind::NonConvergence,
                "variance ratio runs off the upper bracket (tau2 >> sigma2); residual variance ~ 0?");
  }
  const double lo = best == 0 ? 0.0 : std::exp(kGridLo + best - 1);
  const double hi = std::exp(kGridLo + best + 1);

  double lambda = 0.0;
  const double g_lo = derivative(lo, c);
  const double g_hi = derivative(hi, c);
  if (lo == 0.0 && g_lo >= 0.0) {
    lambda = 0.0;
  } else if (g_lo < 0.0 && g_hi > 0.0) {
    const double tol = options.rel_tol * 1e-2;
    auto close_enough = [tol](double a, double b) {
      return std::abs(b - a) <= tol * std::max(std::abs(a), std::abs(b));
    };
    std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_iter);
    const auto [a, b] = boost::math::tools::toms748_solve(
        [&](double x) { return derivative(x, c); }, lo, hi, g_lo, g_hi, close_enough, iterations);
    if (iterations >= static_cast<std::uintmax_t>(options.max_iter)) {
      throw Error(ErrorKind::NonConvergence, "variance-ratio root search hit its iteration budget");
    }
    lambda = 0.5 * (a + b);
  } else {
    // Derivative signs disagree with the bracket; fall back to a direct
    // minimization of the criterion in log-lambda.
    std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_iter);
    const double t_lo = best == 0 ? kGridLo - 10.0 : kGridLo + best - 1.0;
    const auto [t, _] = boost::math::tools::brent_find_minima(
        [&](double t) { return criterion(std::exp(t), c); }, t_lo,
        static_cast<double>(kGridLo + best + 1), std::numeric_limits<double>::digits / 2,
        iterations);
    if (iterations >= static_cast<std::uintmax_t>(options.max_iter)) {
      throw Error(ErrorKind::NonConvergence, "variance-ratio search hit its iteration budget");
    }
    lambda = std::exp(t);
  }

  if (lambda > 0.0 && criterion(0.0, c) <= criterion(lambda, c)) lambda = 0.0;
  return finish(lambda, c, true);
}

MixedModelFit fit_random_intercept(std::span<const LongObservation> data,
                                   const std::vector<std::string>& design,
                                   const FitOptions& options) {
  return RandomInterceptModel(data, design).fit(options);
}

// ---------------------------------------------------------------------------
// Wald tests
// ---------------------------------------------------------------------------

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

WaldTest wald_test(const MixedModelFit& fit, const std::string& coefficient, double null_value) {
  if (!fit.converged) {
    throw Error(ErrorKind::NonConvergence, "Wald test on an unconverged fit");
  }
  WaldTest test;
  test.coefficient = coefficient;
  test.null_value = null_value;
  test.estimate = fit.estimate(coefficient);
  test.se = fit.se(coefficient);
  test.z = (test.estimate - null_value) / test.se;
  test.p = normal_two_sided_p(test.z);
  test.ci_lo = test.estimate - kZ975 * test.se;
  test.ci_hi = test.estimate + kZ975 * test.se;
  return test;
}

}  // namespace rankaudit
