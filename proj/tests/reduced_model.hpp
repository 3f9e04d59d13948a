#pragma once

// One period on a K = 4 grid where only the sex ratio at birth is unknown,
// with a quadrature oracle for its posterior mean.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <optional>
#include <random>

#include "recon/sampler.hpp"
#include "recon/simulate.hpp"
#include "support.hpp"

namespace testing {

using namespace recon;

struct ReducedModel {
  ModelGrid grid = testing::make_grid(1960, 1965, 15, 5, 15, {1960, 1965});
  VarianceParams var{{0.0025, 0.01, 0.01, 0.01, 0.01}};
  std::optional<Model> model;

  ReducedModel() {
    ThetaVector initial = reference_theta(grid);
    ThetaVector truth = initial;
    truth.srb[0] = 1.12;
    const Trajectory tr = project_full(truth, grid);
    CensusData census;
    census.years = {1965};
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0.0, 0.05);
    for (Sex s : kSexes) {
      census.counts[idx(s)] = Table(4, 1);
      for (std::size_t a = 0; a < 4; ++a) census.counts[idx(s)](a, 0) = tr.states[1].counts[idx(s)][a] * std::exp(z(rng));
    }
    model.emplace(grid, initial, census, beta_from_elicitation(Elicitation{}, initial));
  }

  double log_density(double u) const {
    ThetaVector th = model->initial();
    th.srb[0] = std::exp(u);
    const Trajectory tr = project_full(th, grid);
    const double d = u - std::log(model->initial().srb[0]);
    return -d * d / (2 * var[ParamClass::Srb]) -
           census_residuals(tr, model->census(), grid)->sum_sq / (2 * var[ParamClass::Count]);
  }

  // Posterior mean of SRB by adaptive quadrature on the log scale.
  double quadrature_mean() const {
    const double c = std::log(model->initial().srb[0]);
    const double peak = log_density(c);
    auto w = [&](double u) { return std::exp(log_density(u) - peak); };
    using boost::math::quadrature::gauss_kronrod;
    const double lo = c - 1.5, hi = c + 1.5;
    const double mass = gauss_kronrod<double, 61>::integrate(w, lo, hi, 15, 1e-12);
    const double first = gauss_kronrod<double, 61>::integrate([&](double u) { return std::exp(u) * w(u); }, lo, hi, 15, 1e-12);
    return first / mass;
  }

  SamplerConfig config(int iterations) const {
    SamplerConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = iterations / 10;
    cfg.update_class = {false, false, false, false, true};
    cfg.update_variances = false;
    cfg.initial_variances = var;
    cfg.seed = 12;
    return cfg;
  }
};

}  // namespace testing
