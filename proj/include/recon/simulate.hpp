#pragma once

#include <cstdint>
#include <optional>

#include "recon/grid.hpp"
#include "recon/priors.hpp"

namespace recon {

// A plausible schedule on any grid: counts falling with age, a fertility
// hump with TFR 2.5, survival 0.85 to 0.9 (0.5 in the open group), no
// migration, SRB 1.05. Survival stays below 1 / (1 + 0.1) so the default
// survival elicitation is not capped at 1.
ThetaVector reference_theta(const ModelGrid& grid);

struct SimulateOptions {
  // Use these variances instead of drawing them from the InvGamma prior.
  std::optional<VarianceParams> variances;
  // Joint (sigma^2, theta) draws allowed before giving up.
  int max_attempts = 1000;
};

struct Simulation {
  HyperParams hyper;
  VarianceParams variances;   // true sigma^2
  ThetaVector truth;
  InitialEstimates initial;   // the centre the truth was drawn around
  CensusData census;          // one column per census year
};

// Draws sigma^2 ~ InvGamma(alpha, beta) (unless fixed) and the truth
// theta ~ N(centre, sigma^2) on each class's transformed scale, redrawing
// both while the projection has a negative count or a zero count at a
// census year. This is the positivity-truncated joint prior the sampler
// targets. Census counts are the
// projected truth times exp(N(0, sigma^2_n)) noise. Deterministic in seed.
// Throws SamplingError when no admissible truth is found.
Simulation simulate(const ModelGrid& grid, const ThetaVector& centre, const Elicitation& elicitation,
                    std::uint64_t seed, const SimulateOptions& options = {});

}  // namespace recon
