#include "recon/ccmpp.hpp"

#include <numeric>

#include "recon/error.hpp"
#include "recon/simd.hpp"

namespace recon {

double PopulationState::total(Sex s) const {
  const auto& c = counts[idx(s)];
  return std::accumulate(c.begin(), c.end(), 0.0);
}

PeriodRates period_rates(const ThetaVector& theta, const ModelGrid& grid, int period) {
  const auto p = static_cast<std::size_t>(period);
  PeriodRates r;
  r.fertility = theta.fertility.column(p);
  for (Sex s : kSexes) {
    r.survival[idx(s)] = theta.survival[idx(s)].column(p);
    r.migration[idx(s)] = theta.migration[idx(s)].column(p);
  }
  r.srb = theta.srb[p];
  r.fert_lo_index = grid.fert_lo_index();
  return r;
}

Table build_leslie(std::span<const double> survival) {
  if (survival.size() < 3)
    throw Error("survival schedule needs at least 3 entries (K >= 2), got " +
                std::to_string(survival.size()));
  const std::size_t K = survival.size() - 1;
  Table L(K - 1, K);
  for (std::size_t i = 0; i + 1 < K; ++i) L(i, i) = survival[i + 1];
  L(K - 2, K - 1) = survival[K];
  return L;
}

double total_births(std::span<const double> female, std::span<const double> female_survival,
                    std::span<const double> fertility, int fert_lo_index) {
  const auto lo = static_cast<std::size_t>(fert_lo_index);
  const std::size_t len = fertility.size();
  if (lo + len > female.size() || lo + len > female_survival.size())
    throw Error("fertile span exceeds the age schedule");
  const auto& k = simd::kernels();
  double exposure = 0.0;
  if (lo == 0) {
    // No group below age 0: the entering-cohort term vanishes.
    exposure = fertility[0] * female[0];
    if (len > 1)
      exposure += k.births_exposure(fertility.data() + 1, female.data() + 1, female.data(),
                                    female_survival.data() + 1, len - 1);
  } else {
    exposure = k.births_exposure(fertility.data(), female.data() + lo, female.data() + lo - 1,
                                 female_survival.data() + lo, len);
  }
  return 5.0 * exposure / 2.0;
}

double total_births(const PopulationState& state, std::span<const double> female_survival,
                    std::span<const double> fertility, int fert_lo_index) {
  return total_births(state.of(Sex::Female), female_survival, fertility, fert_lo_index);
}

namespace {

void advance_sex(std::span<const double> n, std::span<const double> g, std::span<const double> s,
                 std::span<double> out) {
  const std::size_t K = n.size();
  simd::kernels().age_forward(n.data(), g.data(), s.data(), out.data(), K);
  const double m_prev = (n[K - 2] * g[K - 2]) * 0.5;
  const double m_open = (n[K - 1] * g[K - 1]) * 0.5;
  out[K - 1] = (s[K - 1] * (n[K - 2] + m_prev) + s[K] * (n[K - 1] + m_open)) + (m_prev + m_open);
}

void step_into(const PopulationState& state, const PeriodRates& rates, int step_years,
               PopulationState& next, double& births) {
  const std::size_t K = state.counts[0].size();
  if (K < 2) throw Error("projection needs at least two age groups");
  next.year = state.year + step_years;
  births = total_births(state, rates.survival[idx(Sex::Female)], rates.fertility,
                        rates.fert_lo_index);
  const double share[2] = {births / (1.0 + rates.srb), births * rates.srb / (1.0 + rates.srb)};
  for (Sex s : kSexes) {
    auto& out = next.counts[idx(s)];
    out.resize(K);
    const auto n = state.of(s);
    const auto g = rates.migration[idx(s)];
    const auto sv = rates.survival[idx(s)];
    advance_sex(n, g, sv, out);
    const double g0 = g[0];
    out[0] = share[idx(s)] * (sv[0] * (1.0 + g0 / 2.0) + g0 / 2.0);
  }
}

std::optional<NegativeCount> find_negative(const PopulationState& st, int step_years) {
  for (Sex s : kSexes) {
    const auto& c = st.counts[idx(s)];
    for (std::size_t a = 0; a < c.size(); ++a)
      if (c[a] < 0.0) return NegativeCount{static_cast<int>(a) * step_years, st.year, s, c[a]};
  }
  return std::nullopt;
}

}  // namespace

StepResult project_step(const PopulationState& state, const PeriodRates& rates, int step) {
  StepResult r;
  step_into(state, rates, step, r.state, r.births);
  r.negative = find_negative(r.state, step);
  return r;
}

PopulationState baseline_state(const ThetaVector& theta, const ModelGrid& grid) {
  PopulationState st;
  st.year = grid.t0;
  st.counts = theta.baseline;
  return st;
}

Trajectory project_full(const PopulationState& baseline, const ThetaVector& theta,
                        const ModelGrid& grid) {
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(grid.periods()) + 1);
  traj.states.push_back(baseline);
  traj.births.assign(static_cast<std::size_t>(grid.periods()), 0.0);
  traj.states.resize(static_cast<std::size_t>(grid.periods()) + 1);
  reproject_from(traj, theta, grid, 0);
  return traj;
}

Trajectory project_full(const ThetaVector& theta, const ModelGrid& grid) {
  return project_full(baseline_state(theta, grid), theta, grid);
}

void reproject_from(Trajectory& traj, const ThetaVector& theta, const ModelGrid& grid, int period) {
  const int P = grid.periods();
  if (static_cast<int>(traj.states.size()) != P + 1 || static_cast<int>(traj.births.size()) != P)
    throw Error("trajectory does not match the grid");
  for (int p = period; p < P; ++p) {
    const auto up = static_cast<std::size_t>(p);
    step_into(traj.states[up], period_rates(theta, grid, p), grid.step, traj.states[up + 1],
              traj.births[up]);
  }
  traj.first_negative.reset();
  for (const auto& st : traj.states) {
    if (auto neg = find_negative(st, grid.step)) {
      traj.first_negative = neg;
      break;
    }
  }
}

int positivity_indicator(const Trajectory& traj) {
  for (const auto& st : traj.states)
    for (const auto& c : st.counts)
      for (double x : c)
        if (!(x >= 0.0)) return 0;
  return 1;
}

}  // namespace recon
