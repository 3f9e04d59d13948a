#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "recon/ccmpp.hpp"
#include "recon/grid.hpp"
#include "recon/priors.hpp"

namespace recon {

using Rng = std::mt19937_64;

struct SamplerConfig {
  int iterations = 2000;  // total sweeps, burn-in included
  int burn_in = 1000;
  int thin = 1;
  // Proposal standard deviations on each class's transformed scale.
  std::array<double, kNumClasses> initial_scale{0.02, 0.02, 0.05, 0.01, 0.02};
  // Sweeps (from the start of burn-in) during which proposal scales adapt;
  // negative means "all of burn-in". Never extends past burn-in.
  int adapt_window = -1;
  double target_accept = 0.44;
  double adapt_rate = 1.0;
  std::uint64_t seed = 1;
  int chains = 1;
  // Classes that are sampled; the others stay at their initial estimates.
  std::array<bool, kNumClasses> update_class{true, true, true, true, true};
  bool update_variances = true;
  // Starting variances; the prior modes beta / (alpha + 1) when unset.
  std::optional<VarianceParams> initial_variances;
  // Extra paired survival/migration moves along the direction the cohort
  // counts cannot see (see mh_update_ridge). Only used when both classes
  // are updated.
  bool ridge_moves = true;
  double ridge_scale = 0.01;  // initial step on the migration scale
  // One whole-vector random-walk move per sweep, with a proposal covariance
  // estimated during burn-in and frozen afterwards. Needs burn_in >= 40.
  bool block_moves = true;

  bool operator==(const SamplerConfig&) const = default;
};

// Throws SamplingError describing the first problem found.
void check_config(const SamplerConfig& config);

// Everything the posterior depends on besides the parameters themselves.
class Model {
 public:
  Model(ModelGrid grid, InitialEstimates initial, CensusData census, HyperParams hyper);

  const ModelGrid& grid() const { return grid_; }
  const InitialEstimates& initial() const { return initial_; }
  const CensusData& census() const { return census_; }
  const HyperParams& hyper() const { return hyper_; }
  const ParamLayout& layout() const { return layout_; }
  // Transformed initial estimate of component i.
  double centre(std::size_t i) const { return centres_[i]; }

  // With the census likelihood off the chain samples the prior (restricted
  // to nonnegative projections), which gives prior-predictive summaries.
  bool census_likelihood() const { return census_likelihood_; }
  void set_census_likelihood(bool on) { census_likelihood_ = on; }

 private:
  ModelGrid grid_;
  InitialEstimates initial_;
  CensusData census_;
  HyperParams hyper_;
  ParamLayout layout_;
  std::vector<double> centres_;
  bool census_likelihood_ = true;
};

// Unnormalized joint log-posterior of (theta, sigma^2); -inf when the
// projection has a negative count or a nonpositive count at a census year.
double log_posterior(const ThetaVector& theta, const VarianceParams& variances,
                     const InitialEstimates& initial, const HyperParams& hyper,
                     const CensusData& census, const ModelGrid& grid);
double log_posterior(const ThetaVector& theta, const VarianceParams& variances, const Model& model);

// Current point of a chain plus cached projection and census residuals.
struct ChainState {
  ThetaVector theta;
  VarianceParams variances;
  Trajectory trajectory;
  Residuals census;
  Trajectory scratch;

  // Throws SamplingError if the posterior is zero at this point.
  static ChainState start(const Model& model, ThetaVector theta, VarianceParams variances);
  double log_posterior(const Model& model) const;
};

struct MhOutcome {
  bool accepted = false;
  double accept_prob = 0.0;  // min(1, exp(delta)); 0 for proposals outside the support
};

// Gaussian random-walk update of one component on its transformed scale.
// The projection is recomputed from the earliest period the component feeds.
MhOutcome mh_update_component(ChainState& state, const Model& model, std::size_t component,
                              double scale, Rng& rng);

// Survival entry s_i paired with the migration entry g_j (j = max(i-1, 0),
// same sex and period) that feeds the same cohort. The cohort reaching age
// group i depends on them only through s_i(1 + g_j/2) + g_j/2.
struct RidgePair {
  std::size_t survival;   // component index
  std::size_t migration;  // component index
};
std::vector<RidgePair> ridge_pairs(const ParamLayout& layout);

// Moves g_j by a Gaussian step and solves for s_i so that the combination
// above is unchanged. The map is its own inverse for the negated step, so
// the acceptance ratio carries the Jacobian |d logit s_i' / d logit s_i|.
MhOutcome mh_update_ridge(ChainState& state, const Model& model, const RidgePair& pair, double scale,
                          Rng& rng);

// Joint proposal over `components`: u' = u + scale * L z on the transformed
// scales, with L lower triangular (row-major, d x d).
struct BlockProposal {
  std::vector<std::size_t> components;
  std::vector<double> chol;
};
MhOutcome mh_update_block(ChainState& state, const Model& model, const BlockProposal& block, double scale,
                          Rng& rng);

// Shape/scale of each conditional InvGamma(alpha + m/2, beta + SS/2).
struct InvGammaParams {
  double shape = 0.0;
  double scale = 0.0;
};
std::array<InvGammaParams, kNumClasses> variance_conditionals(
    const std::array<Residuals, kNumClasses>& residuals, const HyperParams& hyper);

// Residuals feeding each variance; the count class pools the baseline prior
// residuals with the census log-residuals since both share sigma^2_n.
std::array<Residuals, kNumClasses> variance_residuals(const ChainState& state, const Model& model);

// Conjugate draw of the variances. Classes with update[c] false keep
// `current`'s value.
VarianceParams gibbs_update_variances(const std::array<Residuals, kNumClasses>& residuals,
                                      const HyperParams& hyper, Rng& rng,
                                      const VarianceParams& current = {},
                                      const std::array<bool, kNumClasses>& update = {true, true, true, true, true});

struct PosteriorSample {
  ModelGrid grid;
  SamplerConfig config;
  int chain = 0;
  std::uint64_t chain_seed = 0;
  std::size_t width = 0;                   // parameters per draw
  std::vector<double> theta;               // draws x width, row-major, natural scale
  std::vector<VarianceParams> variances;   // one per draw
  std::vector<std::uint64_t> accepted;     // per component, retained sweeps only
  std::vector<std::uint64_t> attempted;
  std::vector<double> final_scales;        // per component

  std::size_t size() const { return variances.size(); }
  std::span<const double> draw(std::size_t d) const { return {theta.data() + d * width, width}; }
  std::vector<double> trace(std::size_t component) const;
  double acceptance_rate(std::size_t component) const;
};

// Systematic scan: every updated theta component once, then every ridge
// pair, then the block move once its covariance exists, then the variance
// block. Scales adapt by log-scale Robbins-Monro during the adaptation
// window and are frozen afterwards. Deterministic given config.seed and chain.
PosteriorSample run_chain(const SamplerConfig& config, const Model& model, int chain = 0);

// config.chains chains in parallel threads, chain c seeded from (seed, c).
std::vector<PosteriorSample> run_chains(const SamplerConfig& config, const Model& model);

std::uint64_t chain_seed(std::uint64_t seed, int chain);

}  // namespace recon
