#pragma once

// Random-intercept linear mixed model
//
//     y = X beta + Z b + e,   b ~ N(0, tau2 I),   e ~ N(0, sigma2 I)
//
// with one intercept per group. beta and sigma2 are profiled out in closed
// form for a given variance ratio lambda = tau2 / sigma2, leaving a scalar
// problem in lambda. With V = I + lambda Z Z', the profiled criteria are
//
//     REML: (n - p) log Q + log|V| + log|X' V^-1 X|
//     ML:   n log Q + log|V|
//
// where Q is the generalized residual sum of squares. V is block diagonal
// with blocks I + lambda J, so every quantity reduces to per-group sums.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rankaudit {

struct LongObservation {
  std::string group;  // grouping factor, e.g. query_id
  double response = 0.0;
  std::map<std::string, double> covariates;
};

enum class Criterion { REML, ML };

inline constexpr const char* kIntercept = "intercept";

struct FitOptions {
  Criterion criterion = Criterion::REML;
  // Relative tolerance on lambda for the stationary point.
  double rel_tol = 1e-8;
  int max_iter = 200;
};

struct MixedModelFit {
  std::vector<std::string> coefficients;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // of beta
  double tau2 = 0.0;
  double sigma2 = 0.0;
  double lambda = 0.0;
  double loglik = 0.0;
  bool converged = false;
  std::size_t n_obs = 0;
  std::size_t n_groups = 0;
  Criterion criterion = Criterion::REML;
  std::vector<std::string> warnings;

  // Throw Error(CoefficientMissing).
  double estimate(const std::string& coefficient) const;
  double se(const std::string& coefficient) const;
  std::map<std::string, double> estimates() const;
  std::map<std::string, double> standard_errors() const;
};

class RandomInterceptModel {
 public:
  // `design` names the fixed-effect columns in order; kIntercept is a column
  // of ones, anything else is read from LongObservation::covariates.
  // Throws Error(TooFewGroups), Error(RankDeficientDesign) or
  // Error(InvalidArgument) for too few observations or absent covariates.
  RandomInterceptModel(std::span<const LongObservation> data, std::vector<std::string> design);

  std::size_t n_obs() const noexcept { return n_obs_; }
  std::size_t n_groups() const noexcept { return groups_.size(); }
  std::size_t n_coefficients() const noexcept { return design_.size(); }
  // False when no group has two or more observations.
  bool variance_identifiable() const noexcept;

  // Profiled -2 log-likelihood (up to the constants included in loglik).
  double criterion(double lambda, Criterion c = Criterion::REML) const;
  // d criterion / d lambda.
  double derivative(double lambda, Criterion c = Criterion::REML) const;

  // GLS estimate of beta at a fixed lambda.
  Eigen::VectorXd gls_beta(double lambda) const;

  MixedModelFit fit(const FitOptions& options = {}) const;

 private:
  struct Group {
    std::size_t n = 0;
    Eigen::MatrixXd xtx;   // X_g' X_g
    Eigen::VectorXd xt1;   // X_g' 1
    Eigen::VectorXd xty;   // X_g' y_g
    double sum_y = 0.0;
    Eigen::MatrixXd x;     // rows of X_g
    Eigen::VectorXd y;
  };

  struct Profile {
    Eigen::VectorXd beta;
    Eigen::LDLT<Eigen::MatrixXd> a;  // X' V^-1 X
    double q = 0.0;
    double log_det_v = 0.0;
  };

  Profile profile(double lambda) const;
  MixedModelFit finish(double lambda, Criterion c, bool converged) const;

  std::vector<std::string> design_;
  std::vector<Group> groups_;
  std::size_t n_obs_ = 0;
};

MixedModelFit fit_random_intercept(std::span<const LongObservation> data,
                                   const std::vector<std::string>& design,
                                   const FitOptions& options = {});

struct WaldTest {
  std::string coefficient;
  double null_value = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;  // two-sided, standard normal reference
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

inline constexpr double kZ975 = 1.96;

// Two-sided standard normal tail probability of |z|.
double normal_two_sided_p(double z);

// Throws Error(CoefficientMissing), or Error(NonConvergence) for an
// unconverged fit.
WaldTest wald_test(const MixedModelFit& fit, const std::string& coefficient, double null_value);

}  // namespace rankaudit
