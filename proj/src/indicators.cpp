#include "recon/indicators.hpp"

#include <numeric>

#include "recon/error.hpp"

namespace recon {

double tfr(std::span<const double> fertility) {
  return 5.0 * std::accumulate(fertility.begin(), fertility.end(), 0.0);
}

double life_expectancy(std::span<const double> survival) {
  if (survival.size() < 2) throw DomainError("life expectancy needs at least two survival entries");
  const double open = survival.back();
  if (!(open < 1.0))
    throw DomainError("open-group survival " + std::to_string(open) +
                      " >= 1: life expectancy is unbounded");
  double alive = 1.0;
  double years = 0.0;
  for (std::size_t a = 0; a + 1 < survival.size(); ++a) {
    alive *= survival[a];
    years += alive;
  }
  return 5.0 * years + 5.0 * alive * (open / (1.0 - open));
}

double u5mr(double s0) { return 1000.0 * (1.0 - s0); }

double sex_ratio_u5mr(const ThetaVector& theta, int period) {
  const auto p = static_cast<std::size_t>(period);
  const double female = u5mr(theta.survival[idx(Sex::Female)](0, p));
  const double male = u5mr(theta.survival[idx(Sex::Male)](0, p));
  if (female == 0.0) throw DomainError("female U5MR is zero; sex ratio undefined");
  return male / female;
}

double sex_diff_e0(const ThetaVector& theta, int period) {
  const auto p = static_cast<std::size_t>(period);
  return life_expectancy(theta.survival[idx(Sex::Female)].column(p)) -
         life_expectancy(theta.survival[idx(Sex::Male)].column(p));
}

double srtp(const PopulationState& state) {
  const double females = state.total(Sex::Female);
  if (!(females > 0.0)) throw DomainError("no females in population; SRTP undefined");
  return state.total(Sex::Male) / females;
}

double sru5(const PopulationState& state) {
  const double females = state.counts[idx(Sex::Female)].at(0);
  if (!(females > 0.0)) throw DomainError("no females aged 0-5; SRU5 undefined");
  return state.counts[idx(Sex::Male)].at(0) / females;
}

double avg_annual_net_migrants(std::span<const double> counts, std::span<const double> migration,
                               int step) {
  if (counts.size() != migration.size())
    throw Error("counts and migration schedules differ in length");
  double migrants = 0.0;
  for (std::size_t a = 0; a < counts.size(); ++a) migrants += counts[a] * migration[a];
  return migrants / step;
}

}  // namespace recon
