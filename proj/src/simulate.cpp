#include "recon/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "recon/ccmpp.hpp"
#include "recon/error.hpp"
#include "recon/sampler.hpp"

namespace recon {

ThetaVector reference_theta(const ModelGrid& grid) {
  require_valid_grid(grid);
  ThetaVector th = ThetaVector::shaped(grid);
  const int K = grid.age_groups();
  const int P = grid.periods();
  for (Sex s : kSexes) {
    const double base = s == Sex::Female ? 100000.0 : 104000.0;
    for (int a = 0; a < K; ++a) th.baseline[idx(s)][a] = base * std::pow(0.93, a);
    for (int p = 0; p < P; ++p) {
      for (int a = 0; a <= K; ++a) {
        double v = 0.9;
        if (a == 0) v = s == Sex::Female ? 0.86 : 0.85;
        if (a == K) v = 0.5;
        th.survival[idx(s)](a, p) = v;
        if (a < K) th.migration[idx(s)](a, p) = 0.0;
      }
    }
  }
  const int G = grid.fertile_groups();
  double norm = 0.0;
  std::vector<double> shape(G);
  for (int i = 0; i < G; ++i) {
    shape[i] = std::sin(std::numbers::pi * (i + 0.5) / G);
    norm += shape[i];
  }
  for (int p = 0; p < P; ++p) {
    for (int i = 0; i < G; ++i) th.fertility(i, p) = 0.5 * shape[i] / norm;
    th.srb[p] = 1.05;
  }
  return th;
}

namespace {

double perturb(ParamClass c, double centre, double sigma, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  return from_transformed(c, to_transformed(c, centre) + sigma * z(rng));
}

bool usable(const VarianceParams& v) {
  for (double x : v.sigma2)
    if (!(x > 0.0) || !std::isfinite(x)) return false;
  return true;
}

// False when a draw underflowed to an unusable variance.
bool draw_variances(Simulation& out, const SimulateOptions& options, Rng& rng) {
  if (options.variances) {
    out.variances = *options.variances;
    return true;
  }
  for (ParamClass c : kClasses) {
    std::gamma_distribution<double> gamma(out.hyper.alpha_of(c), 1.0);
    out.variances[c] = out.hyper.beta_of(c) / gamma(rng);
  }
  return usable(out.variances);
}

}  // namespace

Simulation simulate(const ModelGrid& grid, const ThetaVector& centre, const Elicitation& elicitation,
                    std::uint64_t seed, const SimulateOptions& options) {
  require_valid_grid(grid);
  if (auto rep = validate_theta(grid, centre); !rep.ok())
    throw ValidationError("invalid centre for simulation:\n" + rep.to_string());
  if (options.max_attempts < 1) throw ValidationError("max_attempts must be at least 1");
  if (options.variances && !usable(*options.variances))
    throw ValidationError("simulation variances must be positive and finite");

  Simulation out;
  out.hyper = beta_from_elicitation(elicitation, centre);
  out.initial = centre;

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x53494dU};
  Rng rng(seq);

  const ParamLayout layout(grid);
  for (int attempt = 0;; ++attempt) {
    if (attempt == options.max_attempts)
      throw SamplingError("no admissible truth found in " + std::to_string(options.max_attempts) +
                          " draws; every draw projected a negative count");
    if (!draw_variances(out, options, rng)) continue;
    ThetaVector truth = centre;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const Component& c = layout[i];
      ParamLayout::ref(truth, c) =
          perturb(c.cls, ParamLayout::get(centre, c), std::sqrt(out.variances[c.cls]), rng);
    }
    if (!validate_theta(grid, truth).ok()) continue;
    Trajectory traj = project_full(truth, grid);
    if (!positivity_indicator(traj)) continue;
    bool census_positive = true;
    for (int y : grid.census_years)
      for (Sex s : kSexes)
        for (double v : traj.states[grid.year_index(y)].of(s)) census_positive = census_positive && v > 0.0;
    if (!census_positive) continue;
    out.truth = std::move(truth);

    const int K = grid.age_groups();
    const double sd_n = std::sqrt(out.variances[ParamClass::Count]);
    std::normal_distribution<double> z(0.0, 1.0);
    out.census.years = grid.census_years;
    for (Sex s : kSexes) out.census.counts[idx(s)] = Table(K, grid.census_years.size());
    for (std::size_t j = 0; j < grid.census_years.size(); ++j) {
      const auto& state = traj.states[grid.year_index(grid.census_years[j])];
      for (Sex s : kSexes)
        for (int a = 0; a < K; ++a)
          out.census.counts[idx(s)](a, j) = state.counts[idx(s)][a] * std::exp(sd_n * z(rng));
    }
    return out;
  }
}

}  // namespace recon
