#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/sampler.hpp"
#include "recon/table.hpp"

namespace recon {

// One scalar indicator for every draw over a run of years. Stored
// year-major so each year's draws are contiguous.
class TrajectoryMatrix {
 public:
  TrajectoryMatrix() = default;
  TrajectoryMatrix(std::string name, std::vector<int> years, std::size_t draws);
  // rows[d][p] is draw d at years[p]; throws Error if ragged.
  static TrajectoryMatrix from_rows(std::string name, std::vector<int> years,
                                    const std::vector<std::vector<double>>& rows);

  const std::string& name() const { return name_; }
  const std::vector<int>& years() const { return years_; }
  std::size_t draws() const { return draws_; }
  std::size_t periods() const { return years_.size(); }

  double& at(std::size_t draw, std::size_t period) { return values_[period * draws_ + draw]; }
  double at(std::size_t draw, std::size_t period) const { return values_[period * draws_ + draw]; }
  std::span<const double> column(std::size_t period) const {
    return {values_.data() + period * draws_, draws_};
  }
  // Column index of a year; throws Error if absent.
  std::size_t period_of(int year) const;

 private:
  std::string name_;
  std::vector<int> years_;
  std::size_t draws_ = 0;
  std::vector<double> values_;
};

// Quantiles per year; values(p, i) is probs[i] at years[p].
struct QuantileTable {
  std::vector<double> probs;
  std::vector<int> years;
  Table values;

  // All years for one probability; throws Error if the probability is absent.
  std::span<const double> row(double prob) const;
};

// Type-7 empirical quantiles of each column. Throws Error on an empty sample.
QuantileTable marginal_quantiles(const TrajectoryMatrix& m, std::span<const double> probs);

// Mean of (upper - lower) / 2 over all cells. Throws Error on shape mismatch.
double mean_half_width(std::span<const double> lower, std::span<const double> upper);
double mean_half_width(const QuantileTable& table, double lower_prob, double upper_prob);

enum class Direction { Above, AtLeast, Below, AtMost };  // >, >=, <, <=
std::string_view direction_symbol(Direction d);

// Fraction of draws beyond the threshold, per year.
std::vector<double> exceedance_prob(const TrajectoryMatrix& m, double threshold, Direction dir);

// value(year_b) - value(year_a) per draw.
std::vector<double> endpoint_diff(const TrajectoryMatrix& m, int year_a, int year_b);
// OLS slope of each draw's series on the years (units per year). Throws
// Error with fewer than two years.
std::vector<double> ols_slope(const TrajectoryMatrix& m);

// Fraction of draws where every predicate holds; predicates[k][d] is the
// k-th predicate on draw d. Throws Error if lengths differ.
double joint_event_prob(const std::vector<std::vector<bool>>& predicates);

// Known names: srb, tfr, e0_F, e0_M, e0_diff (female - male), u5mr_F,
// u5mr_M, sru5mr (male / female), srtp, sru5, net_migrants_F,
// net_migrants_M. Period indicators are keyed t0..T-5; srtp and sru5 are
// stock measures keyed t0..T and re-project every draw.
const std::vector<std::string>& indicator_names();
bool is_indicator(std::string_view name);
std::string_view indicator_units(std::string_view name);

// Applies the indicator to every draw of every sample, in order. Throws
// Error for an unknown name or samples on different grids.
TrajectoryMatrix indicator_trajectories(std::span<const PosteriorSample> samples, std::string_view name);
TrajectoryMatrix indicator_trajectories(const PosteriorSample& sample, std::string_view name);

}  // namespace recon
