#pragma once

#include <array>
#include <optional>

#include "recon/ccmpp.hpp"
#include "recon/grid.hpp"

namespace recon {

// Inverse-gamma hyperparameters for each variance class.
struct HyperParams {
  std::array<double, kNumClasses> alpha{};
  std::array<double, kNumClasses> beta{};

  double alpha_of(ParamClass c) const { return alpha[idx(c)]; }
  double beta_of(ParamClass c) const { return beta[idx(c)]; }
  bool operator==(const HyperParams&) const = default;
};

double logit(double p);
double inv_logit(double x);

// Scale on which each class is modelled as Gaussian: log for counts,
// fertility and SRB; logit for survival; identity for migration.
double to_transformed(ParamClass c, double value);
double from_transformed(ParamClass c, double value);

double normal_logpdf(double x, double mean, double variance);
double log_invgamma(double sigma2, double alpha, double beta);

// Student-t distribution with `df` degrees of freedom. The CDF uses the
// regularized incomplete beta function (Lentz continued fraction); the
// quantile bisects the CDF to full double precision, so it is deterministic
// and platform independent up to libm's lgamma/log/exp.
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);
double standard_normal_quantile(double p);

// Number of transformed residuals and their sum of squares.
struct Residuals {
  std::size_t count = 0;
  double sum_sq = 0.0;
};

// Transformed-scale residuals theta - theta* per class. Throws DomainError if
// a value cannot be transformed.
std::array<Residuals, kNumClasses> prior_residuals(const ThetaVector& theta,
                                                   const InitialEstimates& initial);

// Residuals log(census) - log(projected) at census years after t0; nullopt
// if a projected count at one of those years is not strictly positive.
std::optional<Residuals> census_residuals(const Trajectory& traj, const CensusData& census,
                                          const ModelGrid& grid);

// Log-density of the transformed parameters (Gaussian on each class's
// scale). Sampling happens in these coordinates, so no Jacobian is added.
double log_prior_theta(const ThetaVector& theta, const InitialEstimates& initial,
                       const VarianceParams& variances);
// Contribution of a single component to log_prior_theta.
double log_prior_component(const ThetaVector& theta, const InitialEstimates& initial,
                           const VarianceParams& variances, const Component& c);

// Gaussian log-density of log census counts around log projected counts at
// census years strictly after t0. Throws DomainError on a nonpositive
// projected count or a missing census year.
double log_likelihood_census(const Trajectory& traj, const CensusData& census, double sigma2_n,
                             const ModelGrid& grid);

double log_prior_variances(const VarianceParams& variances, const HyperParams& hyper);

// Gaussian log-density from a residual summary.
double gaussian_block_logpdf(const Residuals& r, double variance);

// Turns elicited relative errors into inverse-gamma scales. With
// q = t_{0.95, 2 alpha}:
//   n, f, srb:  beta = alpha * (log(1 + eta) / q)^2
//   g:          beta = alpha * (eta / q)^2
//   s:          beta = alpha * (d / q)^2, d the widest logit half-width of
//               [s*(1 - eta), min(s*(1 + eta), 1 - 1e-6)] over all s*.
// Throws ValidationError for nonpositive alpha or eta, eta >= 1 for
// survival, or when every s*(1 + eta) >= 1.
HyperParams beta_from_elicitation(const Elicitation& elicitation, const InitialEstimates& initial);

}  // namespace recon
