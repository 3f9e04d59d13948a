#include "recon/sampler.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "recon/error.hpp"

namespace recon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string describe(const NegativeCount& n) {
  return "negative count " + std::to_string(n.value) + " at age " + std::to_string(n.age) + ", year " +
         std::to_string(n.year) + ", sex " + std::string(1, sex_code(n.sex));
}

bool in_support(ParamClass c, double value) {
  switch (c) {
    case ParamClass::Survival: return value > 0.0 && value < 1.0;
    case ParamClass::Migration: return std::isfinite(value);
    default: return value > 0.0 && std::isfinite(value);
  }
}

}  // namespace

void check_config(const SamplerConfig& c) {
  if (c.iterations <= 0) throw SamplingError("iterations must be > 0");
  if (c.burn_in < 0) throw SamplingError("burn-in must be >= 0");
  if (c.thin < 1) throw SamplingError("thinning interval must be >= 1");
  if (c.chains < 1) throw SamplingError("number of chains must be >= 1");
  if (!(c.target_accept > 0.0 && c.target_accept < 1.0))
    throw SamplingError("target acceptance rate must lie in (0, 1)");
  if (!(c.adapt_rate >= 0.0)) throw SamplingError("adaptation rate must be >= 0");
  if (c.initial_variances)
    for (double v : c.initial_variances->sigma2)
      if (!(v > 0.0 && std::isfinite(v))) throw SamplingError("initial variances must be finite and > 0");
  for (double s : c.initial_scale)
    if (!(s >= 0.0 && std::isfinite(s))) throw SamplingError("proposal scales must be finite and >= 0");
  if (!(c.ridge_scale >= 0.0 && std::isfinite(c.ridge_scale)))
    throw SamplingError("ridge proposal scale must be finite and >= 0");
  if (c.iterations <= c.burn_in)
    throw SamplingError("no draws retained: iterations (" + std::to_string(c.iterations) +
                        ") must exceed burn-in (" + std::to_string(c.burn_in) + ")");
}

Model::Model(ModelGrid grid, InitialEstimates initial, CensusData census, HyperParams hyper)
    : grid_(std::move(grid)),
      initial_(std::move(initial)),
      census_(std::move(census)),
      hyper_(hyper),
      layout_(grid_) {
  auto report = validate(grid_, initial_, census_);
  if (!report.ok()) throw ValidationError("invalid model inputs: " + report.to_string());
  for (ParamClass c : kClasses)
    if (!(hyper_.alpha_of(c) > 0.0 && hyper_.beta_of(c) > 0.0))
      throw ValidationError("hyperparameters for class " + std::string(class_name(c)) + " must be > 0");
  centres_.reserve(layout_.size());
  for (std::size_t i = 0; i < layout_.size(); ++i)
    centres_.push_back(to_transformed(layout_[i].cls, ParamLayout::get(initial_, layout_[i])));
}

double log_posterior(const ThetaVector& theta, const VarianceParams& variances,
                     const InitialEstimates& initial, const HyperParams& hyper,
                     const CensusData& census, const ModelGrid& grid) {
  const Trajectory traj = project_full(theta, grid);
  if (positivity_indicator(traj) == 0) return kNegInf;
  const auto census_res = census_residuals(traj, census, grid);
  if (!census_res) return kNegInf;
  return log_prior_theta(theta, initial, variances) +
         gaussian_block_logpdf(*census_res, variances[ParamClass::Count]) +
         log_prior_variances(variances, hyper);
}

double log_posterior(const ThetaVector& theta, const VarianceParams& variances, const Model& model) {
  if (model.census_likelihood())
    return log_posterior(theta, variances, model.initial(), model.hyper(), model.census(), model.grid());
  if (positivity_indicator(project_full(theta, model.grid())) == 0) return kNegInf;
  return log_prior_theta(theta, model.initial(), variances) +
         log_prior_variances(variances, model.hyper());
}

namespace {

std::optional<Residuals> model_census_residuals(const Trajectory& traj, const Model& model) {
  if (!model.census_likelihood()) return Residuals{};
  return census_residuals(traj, model.census(), model.grid());
}

// The cached state at t0 is the baseline itself, so a baseline move has to
// be copied in before re-projecting.
void refresh_scratch(ChainState& st, const Model& model, int first_period) {
  st.scratch = st.trajectory;
  st.scratch.states[0].counts = st.theta.baseline;
  reproject_from(st.scratch, st.theta, model.grid(), first_period);
}

}  // namespace

ChainState ChainState::start(const Model& model, ThetaVector theta, VarianceParams variances) {
  ChainState st;
  st.theta = std::move(theta);
  st.variances = variances;
  auto report = validate_theta(model.grid(), st.theta);
  if (!report.ok()) throw SamplingError("invalid starting point: " + report.to_string());
  st.trajectory = project_full(st.theta, model.grid());
  if (st.trajectory.first_negative)
    throw SamplingError("starting point has zero posterior density: " +
                        describe(*st.trajectory.first_negative));
  auto res = model_census_residuals(st.trajectory, model);
  if (!res) throw SamplingError("starting point projects a zero count at a census year");
  st.census = *res;
  st.scratch = st.trajectory;
  if (!std::isfinite(st.log_posterior(model)))
    throw SamplingError("starting point has non-finite log-posterior");
  return st;
}

double ChainState::log_posterior(const Model& model) const {
  return log_prior_theta(theta, model.initial(), variances) +
         gaussian_block_logpdf(census, variances[ParamClass::Count]) +
         log_prior_variances(variances, model.hyper());
}

MhOutcome mh_update_component(ChainState& st, const Model& model, std::size_t i, double scale,
                              Rng& rng) {
  const Component& c = model.layout()[i];
  const double sigma2 = st.variances[c.cls];
  double& slot = ParamLayout::ref(st.theta, c);
  const double old_value = slot;
  const double u_old = to_transformed(c.cls, old_value);
  std::normal_distribution<double> z(0.0, 1.0);
  const double u_new = u_old + scale * z(rng);
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));

  const double new_value = u_new == u_old ? old_value : from_transformed(c.cls, u_new);
  if (!in_support(c.cls, new_value)) return {};

  const double centre = model.centre(i);
  const double d_old = u_old - centre;
  const double d_new = u_new - centre;
  const double delta_prior = (d_old * d_old - d_new * d_new) / (2.0 * sigma2);

  slot = new_value;
  refresh_scratch(st, model, c.first_period());
  std::optional<Residuals> res;
  if (!st.scratch.first_negative) res = model_census_residuals(st.scratch, model);
  if (!res) {
    slot = old_value;
    return {};
  }
  const double sigma2_n = st.variances[ParamClass::Count];
  const double delta = delta_prior + (st.census.sum_sq - res->sum_sq) / (2.0 * sigma2_n);
  MhOutcome out;
  out.accept_prob = delta >= 0.0 ? 1.0 : std::exp(delta);
  if (log_u < delta) {
    out.accepted = true;
    std::swap(st.trajectory, st.scratch);
    st.census = *res;
  } else {
    slot = old_value;
  }
  return out;
}

std::vector<RidgePair> ridge_pairs(const ParamLayout& layout) {
  const ModelGrid& g = layout.grid();
  const int K = g.age_groups();
  std::vector<RidgePair> out;
  std::vector<std::size_t> surv_index, mig_index;
  // Components are enumerated block by block; index them by (sex, row, period).
  const auto key = [&](Sex s, int row, int p) { return (idx(s) * (K + 1) + row) * g.periods() + p; };
  surv_index.assign(2 * (K + 1) * g.periods(), 0);
  mig_index.assign(2 * (K + 1) * g.periods(), 0);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const Component& c = layout[i];
    if (c.cls == ParamClass::Survival) surv_index[key(c.sex, c.row, c.period)] = i;
    if (c.cls == ParamClass::Migration) mig_index[key(c.sex, c.row, c.period)] = i;
  }
  for (Sex s : kSexes)
    for (int p = 0; p < g.periods(); ++p)
      for (int i = 0; i <= K; ++i)
        out.push_back({surv_index[key(s, i, p)], mig_index[key(s, std::max(i - 1, 0), p)]});
  return out;
}

MhOutcome mh_update_ridge(ChainState& st, const Model& model, const RidgePair& pair, double scale,
                          Rng& rng) {
  const Component& cs = model.layout()[pair.survival];
  const Component& cg = model.layout()[pair.migration];
  double& s_slot = ParamLayout::ref(st.theta, cs);
  double& g_slot = ParamLayout::ref(st.theta, cg);
  const double s_old = s_slot;
  const double g_old = g_slot;
  std::normal_distribution<double> z(0.0, 1.0);
  const double g_new = g_old + scale * z(rng);
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));

  if (g_new == g_old) return {true, 1.0};
  const double a_old = 1.0 + g_old / 2.0;
  const double a_new = 1.0 + g_new / 2.0;
  if (!(a_new > 0.0)) return {};
  const double combo = s_old * a_old + g_old / 2.0;
  const double s_new = (combo - g_new / 2.0) / a_new;
  if (!in_support(ParamClass::Survival, s_new)) return {};

  const double u_old = logit(s_old);
  const double u_new = logit(s_new);
  if (!std::isfinite(u_new)) return {};
  const double ds_old = u_old - model.centre(pair.survival);
  const double ds_new = u_new - model.centre(pair.survival);
  const double dg_old = g_old - model.centre(pair.migration);
  const double dg_new = g_new - model.centre(pair.migration);
  const double delta_prior = (ds_old * ds_old - ds_new * ds_new) / (2.0 * st.variances[ParamClass::Survival]) +
                             (dg_old * dg_old - dg_new * dg_new) / (2.0 * st.variances[ParamClass::Migration]);
  const double log_jacobian =
      std::log(s_old * (1.0 - s_old) * a_old) - std::log(s_new * (1.0 - s_new) * a_new);

  s_slot = s_new;
  g_slot = g_new;
  refresh_scratch(st, model, cs.first_period());
  std::optional<Residuals> res;
  if (!st.scratch.first_negative) res = model_census_residuals(st.scratch, model);
  if (!res) {
    s_slot = s_old;
    g_slot = g_old;
    return {};
  }
  const double delta = delta_prior + log_jacobian +
                       (st.census.sum_sq - res->sum_sq) / (2.0 * st.variances[ParamClass::Count]);
  MhOutcome out;
  out.accept_prob = delta >= 0.0 ? 1.0 : std::exp(delta);
  if (log_u < delta) {
    out.accepted = true;
    std::swap(st.trajectory, st.scratch);
    st.census = *res;
  } else {
    s_slot = s_old;
    g_slot = g_old;
  }
  return out;
}

MhOutcome mh_update_block(ChainState& st, const Model& model, const BlockProposal& block, double scale,
                          Rng& rng) {
  const std::size_t d = block.components.size();
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> zs(d);
  for (double& v : zs) v = z(rng);
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));

  const ParamLayout& layout = model.layout();
  std::vector<double> old_values(d), new_values(d);
  double delta_prior = 0.0;
  int first = model.grid().periods();
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t i = block.components[r];
    const Component& c = layout[i];
    double step = 0.0;
    for (std::size_t k = 0; k <= r; ++k) step += block.chol[r * d + k] * zs[k];
    old_values[r] = ParamLayout::get(st.theta, c);
    const double u_old = to_transformed(c.cls, old_values[r]);
    const double u_new = u_old + scale * step;
    new_values[r] = u_new == u_old ? old_values[r] : from_transformed(c.cls, u_new);
    if (!in_support(c.cls, new_values[r])) return {};
    const double d_old = u_old - model.centre(i);
    const double d_new = u_new - model.centre(i);
    delta_prior += (d_old * d_old - d_new * d_new) / (2.0 * st.variances[c.cls]);
    first = std::min(first, c.first_period());
  }
  const auto restore = [&] {
    for (std::size_t r = 0; r < d; ++r) ParamLayout::ref(st.theta, layout[block.components[r]]) = old_values[r];
  };
  for (std::size_t r = 0; r < d; ++r) ParamLayout::ref(st.theta, layout[block.components[r]]) = new_values[r];
  refresh_scratch(st, model, first);
  std::optional<Residuals> res;
  if (!st.scratch.first_negative) res = model_census_residuals(st.scratch, model);
  if (!res) {
    restore();
    return {};
  }
  const double delta =
      delta_prior + (st.census.sum_sq - res->sum_sq) / (2.0 * st.variances[ParamClass::Count]);
  MhOutcome out;
  out.accept_prob = delta >= 0.0 ? 1.0 : std::exp(delta);
  if (log_u < delta) {
    out.accepted = true;
    std::swap(st.trajectory, st.scratch);
    st.census = *res;
  } else {
    restore();
  }
  return out;
}

namespace {

// Running mean and scatter of the transformed active components.
class CovarianceEstimate {
 public:
  explicit CovarianceEstimate(std::size_t d) : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))),
                                               scatter_(Eigen::MatrixXd::Zero(mean_.size(), mean_.size())) {}

  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd dx = x - mean_;
    mean_ += dx / static_cast<double>(n_);
    scatter_.selfadjointView<Eigen::Lower>().rankUpdate(dx, (static_cast<double>(n_) - 1.0) / n_);
  }

  std::size_t count() const { return n_; }

  // Lower Cholesky factor of the sample covariance, row-major; the diagonal
  // is floored so that components that never moved still get a proposal.
  std::vector<double> cholesky() const {
    const auto d = mean_.size();
    Eigen::MatrixXd cov = scatter_.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n_ - 1);
    for (Eigen::Index k = 0; k < d; ++k) cov(k, k) = std::max(cov(k, k), 1e-10) * (1.0 + 1e-6);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      Eigen::MatrixXd diag = cov.diagonal().asDiagonal();
      llt.compute(diag);
    }
    const Eigen::MatrixXd L = llt.matrixL();
    std::vector<double> out(static_cast<std::size_t>(d * d), 0.0);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c <= r; ++c) out[static_cast<std::size_t>(r * d + c)] = L(r, c);
    return out;
  }

 private:
  std::size_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

}  // namespace

std::array<InvGammaParams, kNumClasses> variance_conditionals(
    const std::array<Residuals, kNumClasses>& residuals, const HyperParams& hyper) {
  std::array<InvGammaParams, kNumClasses> out{};
  for (ParamClass c : kClasses) {
    const auto& r = residuals[idx(c)];
    out[idx(c)].shape = hyper.alpha_of(c) + static_cast<double>(r.count) / 2.0;
    out[idx(c)].scale = hyper.beta_of(c) + r.sum_sq / 2.0;
  }
  return out;
}

std::array<Residuals, kNumClasses> variance_residuals(const ChainState& st, const Model& model) {
  auto res = prior_residuals(st.theta, model.initial());
  auto& n = res[idx(ParamClass::Count)];
  n.count += st.census.count;
  n.sum_sq += st.census.sum_sq;
  return res;
}

VarianceParams gibbs_update_variances(const std::array<Residuals, kNumClasses>& residuals,
                                      const HyperParams& hyper, Rng& rng,
                                      const VarianceParams& current,
                                      const std::array<bool, kNumClasses>& update) {
  const auto cond = variance_conditionals(residuals, hyper);
  VarianceParams out = current;
  for (ParamClass c : kClasses) {
    if (!update[idx(c)]) continue;
    std::gamma_distribution<double> gamma(cond[idx(c)].shape, 1.0);
    out[c] = cond[idx(c)].scale / gamma(rng);
  }
  return out;
}

std::vector<double> PosteriorSample::trace(std::size_t component) const {
  std::vector<double> out(size());
  for (std::size_t d = 0; d < size(); ++d) out[d] = theta[d * width + component];
  return out;
}

double PosteriorSample::acceptance_rate(std::size_t component) const {
  if (attempted.at(component) == 0) return 0.0;
  return static_cast<double>(accepted[component]) / static_cast<double>(attempted[component]);
}

std::uint64_t chain_seed(std::uint64_t seed, int chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

PosteriorSample run_chain(const SamplerConfig& config, const Model& model, int chain) {
  check_config(config);
  const ParamLayout& layout = model.layout();
  const std::size_t width = layout.size();

  PosteriorSample out;
  out.grid = model.grid();
  out.config = config;
  out.chain = chain;
  out.chain_seed = chain_seed(config.seed, chain);
  out.width = width;
  out.accepted.assign(width, 0);
  out.attempted.assign(width, 0);

  Rng rng(out.chain_seed);
  VarianceParams start_var;
  for (ParamClass c : kClasses)
    start_var[c] = model.hyper().beta_of(c) / (model.hyper().alpha_of(c) + 1.0);
  if (config.initial_variances) start_var = *config.initial_variances;
  ChainState st = ChainState::start(model, model.initial(), start_var);

  std::vector<double> log_scale(width);
  for (std::size_t i = 0; i < width; ++i) {
    const double s = config.initial_scale[idx(layout[i].cls)];
    log_scale[i] = s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
  }
  std::vector<RidgePair> ridges;
  if (config.ridge_moves && config.update_class[idx(ParamClass::Survival)] &&
      config.update_class[idx(ParamClass::Migration)])
    ridges = ridge_pairs(layout);
  std::vector<double> ridge_log_scale(ridges.size(), config.ridge_scale > 0.0
                                                         ? std::log(config.ridge_scale)
                                                         : -std::numeric_limits<double>::infinity());
  BlockProposal block;
  for (std::size_t i = 0; i < width; ++i)
    if (config.update_class[idx(layout[i].cls)]) block.components.push_back(i);
  const std::size_t block_dim = block.components.size();
  const bool use_block = config.block_moves && config.burn_in >= 40 && block_dim >= 2;
  // Collect from the second quarter of burn-in; factor at its half and
  // three-quarter marks.
  const int collect_from = config.burn_in / 4;
  const int factor_at[2] = {config.burn_in / 2, 3 * config.burn_in / 4};
  CovarianceEstimate cov(use_block ? block_dim : 0);
  double block_log_scale = std::log(2.38 / std::sqrt(static_cast<double>(std::max<std::size_t>(block_dim, 1))));
  bool block_ready = false;
  int block_steps = 0;
  const int adapt_until =
      config.adapt_window < 0 ? config.burn_in : std::min(config.adapt_window, config.burn_in);

  const auto retained = static_cast<std::size_t>((config.iterations - config.burn_in + config.thin - 1) /
                                                 config.thin);
  out.theta.reserve(retained * width);
  out.variances.reserve(retained);

  for (int iter = 0; iter < config.iterations; ++iter) {
    const bool adapting = iter < adapt_until;
    const bool keep_stats = iter >= config.burn_in;
    const double gain = config.adapt_rate / std::pow(static_cast<double>(iter) + 1.0, 0.6);
    for (std::size_t i = 0; i < width; ++i) {
      if (!config.update_class[idx(layout[i].cls)]) continue;
      const double scale = std::isfinite(log_scale[i]) ? std::exp(log_scale[i]) : 0.0;
      const MhOutcome r = mh_update_component(st, model, i, scale, rng);
      if (adapting && std::isfinite(log_scale[i]))
        log_scale[i] += gain * (r.accept_prob - config.target_accept);
      if (keep_stats) {
        ++out.attempted[i];
        out.accepted[i] += r.accepted ? 1 : 0;
      }
    }
    for (std::size_t k = 0; k < ridges.size(); ++k) {
      const double scale = std::isfinite(ridge_log_scale[k]) ? std::exp(ridge_log_scale[k]) : 0.0;
      const MhOutcome r = mh_update_ridge(st, model, ridges[k], scale, rng);
      if (adapting && std::isfinite(ridge_log_scale[k]))
        ridge_log_scale[k] += gain * (r.accept_prob - config.target_accept);
    }
    if (use_block) {
      if (iter == factor_at[0] || iter == factor_at[1]) {
        block.chol = cov.cholesky();
        block_ready = true;
      }
      if (block_ready) {
        const MhOutcome r = mh_update_block(st, model, block, std::exp(block_log_scale), rng);
        if (adapting)
          block_log_scale += config.adapt_rate / std::pow(static_cast<double>(++block_steps), 0.6) *
                             (r.accept_prob - 0.234);
      }
      if (iter >= collect_from && iter < config.burn_in) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(block_dim));
        for (std::size_t r = 0; r < block_dim; ++r) {
          const Component& c = layout[block.components[r]];
          x(static_cast<Eigen::Index>(r)) = to_transformed(c.cls, ParamLayout::get(st.theta, c));
        }
        cov.add(x);
      }
    }
    if (config.update_variances)
      st.variances = gibbs_update_variances(variance_residuals(st, model), model.hyper(), rng,
                                            st.variances);
    if (keep_stats && (iter - config.burn_in) % config.thin == 0) {
      const auto packed = layout.pack(st.theta);
      out.theta.insert(out.theta.end(), packed.begin(), packed.end());
      out.variances.push_back(st.variances);
    }
  }
  out.final_scales.resize(width);
  for (std::size_t i = 0; i < width; ++i)
    out.final_scales[i] = std::isfinite(log_scale[i]) ? std::exp(log_scale[i]) : 0.0;
  return out;
}

std::vector<PosteriorSample> run_chains(const SamplerConfig& config, const Model& model) {
  check_config(config);
  std::vector<PosteriorSample> out(static_cast<std::size_t>(config.chains));
  std::vector<std::exception_ptr> errors(out.size());
  {
    std::vector<std::jthread> workers;
    for (int c = 0; c < config.chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          out[static_cast<std::size_t>(c)] = run_chain(config, model, c);
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace recon
