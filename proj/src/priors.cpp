#include "recon/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "recon/error.hpp"
#include "recon/simd.hpp"

namespace recon {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

template <typename Cdf>
double bisect_upper_quantile(double p, Cdf cdf) {
  double lo = 0.0;
  double hi = 1.0;
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  for (int i = 0; i < 2000; ++i) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2.0;
}

std::vector<double> transformed(ParamClass c, std::span<const double> values) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = to_transformed(c, values[i]);
  return out;
}

void accumulate(Residuals& r, ParamClass c, std::span<const double> theta,
                std::span<const double> initial) {
  if (theta.size() != initial.size())
    throw Error(std::string("shape mismatch in ") + std::string(class_name(c)) + " block");
  const auto a = transformed(c, theta);
  const auto b = transformed(c, initial);
  r.count += a.size();
  r.sum_sq += simd::sum_sq_diff(a, b);
}

}  // namespace

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit argument outside (0, 1): " + std::to_string(p));
  return std::log(p / (1.0 - p));
}

double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double to_transformed(ParamClass c, double value) {
  switch (c) {
    case ParamClass::Survival: return logit(value);
    case ParamClass::Migration: return value;
    case ParamClass::Count:
    case ParamClass::Fertility:
    case ParamClass::Srb:
      if (!(value > 0.0))
        throw DomainError("log of nonpositive " + std::string(class_name(c)) + " value " +
                          std::to_string(value));
      return std::log(value);
  }
  return value;
}

double from_transformed(ParamClass c, double value) {
  switch (c) {
    case ParamClass::Survival: return inv_logit(value);
    case ParamClass::Migration: return value;
    default: return std::exp(value);
  }
}

double normal_logpdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw DomainError("normal variance must be > 0");
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - d * d / (2.0 * variance);
}

double log_invgamma(double sigma2, double alpha, double beta) {
  if (!(sigma2 > 0.0 && alpha > 0.0 && beta > 0.0))
    throw DomainError("inverse-gamma arguments must be > 0 (sigma2=" + std::to_string(sigma2) +
                      ", alpha=" + std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(sigma2) - beta / sigma2;
}

double student_t_cdf(double x, double df) {
  if (!(df > 0.0)) throw DomainError("degrees of freedom must be > 0");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + x * x));
  return x >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
  if (!(df > 0.0)) throw DomainError("degrees of freedom must be > 0");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  return bisect_upper_quantile(p, [df](double x) { return student_t_cdf(x, df); });
}

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -standard_normal_quantile(1.0 - p);
  return bisect_upper_quantile(
      p, [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); });
}

std::array<Residuals, kNumClasses> prior_residuals(const ThetaVector& theta,
                                                   const InitialEstimates& initial) {
  std::array<Residuals, kNumClasses> out{};
  for (Sex s : kSexes) {
    accumulate(out[idx(ParamClass::Count)], ParamClass::Count, theta.baseline[idx(s)],
               initial.baseline[idx(s)]);
    accumulate(out[idx(ParamClass::Survival)], ParamClass::Survival, theta.survival[idx(s)].data(),
               initial.survival[idx(s)].data());
    accumulate(out[idx(ParamClass::Migration)], ParamClass::Migration,
               theta.migration[idx(s)].data(), initial.migration[idx(s)].data());
  }
  accumulate(out[idx(ParamClass::Fertility)], ParamClass::Fertility, theta.fertility.data(),
             initial.fertility.data());
  accumulate(out[idx(ParamClass::Srb)], ParamClass::Srb, theta.srb, initial.srb);
  return out;
}

std::optional<Residuals> census_residuals(const Trajectory& traj, const CensusData& census,
                                          const ModelGrid& grid) {
  Residuals r;
  for (std::size_t j = 0; j < census.years.size(); ++j) {
    const int year = census.years[j];
    if (year == grid.t0) continue;
    const int yi = grid.year_index(year);
    if (yi < 0 || static_cast<std::size_t>(yi) >= traj.states.size())
      throw DomainError("census year " + std::to_string(year) + " not covered by the trajectory");
    const auto& st = traj.states[static_cast<std::size_t>(yi)];
    for (Sex s : kSexes) {
      const auto proj = st.of(s);
      const auto obs = census.counts[idx(s)].column(j);
      for (std::size_t a = 0; a < proj.size(); ++a) {
        if (!(proj[a] > 0.0)) return std::nullopt;
        const double d = std::log(obs[a]) - std::log(proj[a]);
        r.sum_sq += d * d;
      }
      r.count += proj.size();
    }
  }
  return r;
}

double gaussian_block_logpdf(const Residuals& r, double variance) {
  if (r.count == 0) return 0.0;
  if (!(variance > 0.0)) throw DomainError("variance must be > 0");
  return -0.5 * static_cast<double>(r.count) * (kLog2Pi + std::log(variance)) -
         r.sum_sq / (2.0 * variance);
}

double log_prior_theta(const ThetaVector& theta, const InitialEstimates& initial,
                       const VarianceParams& variances) {
  const auto res = prior_residuals(theta, initial);
  double total = 0.0;
  for (ParamClass c : kClasses) total += gaussian_block_logpdf(res[idx(c)], variances[c]);
  return total;
}

double log_prior_component(const ThetaVector& theta, const InitialEstimates& initial,
                           const VarianceParams& variances, const Component& c) {
  return normal_logpdf(to_transformed(c.cls, ParamLayout::get(theta, c)),
                       to_transformed(c.cls, ParamLayout::get(initial, c)), variances[c.cls]);
}

double log_likelihood_census(const Trajectory& traj, const CensusData& census, double sigma2_n,
                             const ModelGrid& grid) {
  for (int y : grid.census_years) {
    if (y == grid.t0) continue;
    if (std::find(census.years.begin(), census.years.end(), y) == census.years.end())
      throw DomainError("no census counts for census year " + std::to_string(y));
  }
  const auto r = census_residuals(traj, census, grid);
  if (!r) throw DomainError("nonpositive projected count at a census year");
  return gaussian_block_logpdf(*r, sigma2_n);
}

double log_prior_variances(const VarianceParams& variances, const HyperParams& hyper) {
  double total = 0.0;
  for (ParamClass c : kClasses) total += log_invgamma(variances[c], hyper.alpha_of(c), hyper.beta_of(c));
  return total;
}

HyperParams beta_from_elicitation(const Elicitation& e, const InitialEstimates& initial) {
  HyperParams h;
  for (ParamClass c : kClasses) {
    const double alpha = e.alpha[idx(c)];
    const double eta = e.eta[idx(c)];
    const std::string label(class_name(c));
    if (!(alpha > 0.0)) throw ValidationError("alpha_" + label + " must be > 0");
    if (!(eta > 0.0)) throw ValidationError("eta_" + label + " must be > 0 (got " + std::to_string(eta) + ")");
    const double q = student_t_quantile(0.95, 2.0 * alpha);
    double half_width = 0.0;
    switch (c) {
      case ParamClass::Count:
      case ParamClass::Fertility:
      case ParamClass::Srb: half_width = std::log1p(eta); break;
      case ParamClass::Migration: half_width = eta; break;
      case ParamClass::Survival: {
        if (!(eta < 1.0)) throw ValidationError("eta_s must be < 1 so that s*(1 - eta) > 0");
        constexpr double eps = 1e-6;
        bool any_room = false;
        for (Sex s : kSexes) {
          for (double sv : initial.survival[idx(s)].data()) {
            if (!(sv > 0.0 && sv < 1.0))
              throw ValidationError("initial survival estimate outside (0, 1): " + std::to_string(sv));
            if (sv * (1.0 + eta) < 1.0) any_room = true;
            const double upper = std::min(sv * (1.0 + eta), 1.0 - eps);
            const double centre = logit(sv);
            const double up = std::fabs(logit(std::max(upper, sv)) - centre);
            const double down = std::fabs(centre - logit(sv * (1.0 - eta)));
            half_width = std::max({half_width, up, down});
          }
        }
        if (!any_room)
          throw ValidationError("eta_s is degenerate: s*(1 + eta) >= 1 for every initial survival estimate");
        break;
      }
    }
    h.alpha[idx(c)] = alpha;
    h.beta[idx(c)] = alpha * (half_width / q) * (half_width / q);
  }
  return h;
}

}  // namespace recon
