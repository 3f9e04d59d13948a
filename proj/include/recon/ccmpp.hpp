#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "recon/grid.hpp"
#include "recon/table.hpp"

namespace recon {

// Age-sex counts at an exact year.
struct PopulationState {
  int year = 0;
  std::array<std::vector<double>, 2> counts;  // K per sex

  std::span<const double> of(Sex s) const { return counts[idx(s)]; }
  double total(Sex s) const;
  bool operator==(const PopulationState&) const = default;
};

// Inputs for one projection period [t, t+5), viewing into a ThetaVector.
struct PeriodRates {
  std::span<const double> fertility;                 // fertile groups
  std::array<std::span<const double>, 2> survival;   // K + 1 per sex
  std::array<std::span<const double>, 2> migration;  // K per sex
  double srb = 1.05;
  int fert_lo_index = 3;
};

PeriodRates period_rates(const ThetaVector& theta, const ModelGrid& grid, int period);

struct NegativeCount {
  int age;   // lower bound in years
  int year;
  Sex sex;
  double value;
  bool operator==(const NegativeCount&) const = default;
};

struct StepResult {
  PopulationState state;
  double births = 0.0;
  std::optional<NegativeCount> negative;  // first negative output, scanning F then M by age
};

// (K-1) x K matrix mapping counts at t to counts aged 5+ at t+5; row i holds
// s[i+1] at column i and the last row also holds the open-group survival.
// Throws Error if survival has fewer than 3 entries.
Table build_leslie(std::span<const double> survival);

// Total births over [t, t+5) from female exposure only. For the lowest
// fertile group the (fert_lo - 5) group of the state supplies the entering
// cohort; when fert_lo is 0 that term is zero.
double total_births(std::span<const double> female_counts, std::span<const double> female_survival,
                    std::span<const double> fertility, int fert_lo_index);
double total_births(const PopulationState& state, std::span<const double> female_survival,
                    std::span<const double> fertility, int fert_lo_index);

// One period. Half of each age group's net migrants arrive at the start of
// the period and are exposed to survival; the other half arrive at the end
// and are aged forward with their cohort. The two oldest groups feed the
// open group:
//   out[K-1] = (s[K-1]*base[K-2] + s[K]*base[K-1]) + (m[K-2] + m[K-1])
// with m = (n*g)*0.5 and base = n + m.
StepResult project_step(const PopulationState& state, const PeriodRates& rates, int step = 5);

struct Trajectory {
  std::vector<PopulationState> states;  // years t0, t0+5, ..., T
  std::vector<double> births;           // one per period
  std::optional<NegativeCount> first_negative;
};

Trajectory project_full(const ThetaVector& theta, const ModelGrid& grid);
Trajectory project_full(const PopulationState& baseline, const ThetaVector& theta,
                        const ModelGrid& grid);

// Recompute states after `period` in place, reusing states 0..period. The
// result is bit-identical to project_full.
void reproject_from(Trajectory& traj, const ThetaVector& theta, const ModelGrid& grid, int period);

// 1 iff every count at every age, year and sex is >= 0.
int positivity_indicator(const Trajectory& traj);

PopulationState baseline_state(const ThetaVector& theta, const ModelGrid& grid);

}  // namespace recon
