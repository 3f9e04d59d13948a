#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "recon/ccmpp.hpp"
#include "recon/grid.hpp"

namespace recon {

// Values of one indicator keyed by year (period start for period measures,
// exact year for stock measures).
struct IndicatorSeries {
  std::string name;
  std::string units;
  std::map<int, double> values;
};

// Children per woman: 5 * sum of age-specific rates.
double tfr(std::span<const double> fertility);

// Period life expectancy at birth from a K+1 survival schedule (last entry is
// the open group). Throws DomainError if the open-group survival is >= 1.
double life_expectancy(std::span<const double> survival);

// Deaths per 1000 births among the period's birth cohort: 1000 * (1 - s0).
double u5mr(double s0);

double sex_ratio_u5mr(const ThetaVector& theta, int period);  // male / female U5MR
double sex_diff_e0(const ThetaVector& theta, int period);     // female e0 - male e0
double srtp(const PopulationState& state);                    // males per female, all ages
double sru5(const PopulationState& state);                    // males per female, ages [0, 5)
// Net migrants per year over [t, t+5): sum_a n[a] * g[a] / 5.
double avg_annual_net_migrants(std::span<const double> counts, std::span<const double> migration,
                               int step = 5);

}  // namespace recon
