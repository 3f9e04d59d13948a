#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/summaries.hpp"

namespace recon {

// Indicator names are matched case-insensitively ("SRB" is "srb").
// Throws ValidationError for unknown names.
std::string canonical_indicator(std::string_view name);

// "srb>1.06", "tfr<=2.1"
struct ThresholdSpec {
  std::string indicator;
  Direction dir = Direction::Above;
  double value = 0.0;
};
ThresholdSpec parse_threshold(std::string_view text);

// "srb:diff:1995:2005", "srb:slope", "srb:slope:1995:2005"
struct TrendSpec {
  enum class Kind { Diff, Slope };
  std::string indicator;
  Kind kind = Kind::Slope;
  std::optional<int> from, to;
};
TrendSpec parse_trend(std::string_view text);

// One per-draw predicate: "srb@1995>1.06", "srb:diff:1995:2005>0",
// "srb:slope:1995:2005<0".
struct EventSpec {
  std::string indicator;
  std::optional<int> year;      // value at a year
  std::optional<TrendSpec> trend;
  Direction dir = Direction::Above;
  double value = 0.0;
};
EventSpec parse_event(std::string_view text);
// Predicates joined by '&'.
std::vector<EventSpec> parse_joint(std::string_view text);

// Years first..last (inclusive) of a trajectory; throws Error if either end
// is absent or fewer than one year remains.
TrajectoryMatrix slice_years(const TrajectoryMatrix& m, int first, int last);

// Per-draw values of a trend measure.
std::vector<double> trend_values(const TrajectoryMatrix& m, const TrendSpec& spec);

struct SummaryRequest {
  std::vector<std::string> indicators;
  std::vector<double> probs{0.025, 0.1, 0.5, 0.9, 0.975};
  std::vector<ThresholdSpec> thresholds;
  std::vector<TrendSpec> trends;
  std::vector<std::string> joints;  // unparsed, reported verbatim
};

// Tidy output row; `period` is a year, "Y1-Y2", or "all".
struct SummaryRow {
  std::string indicator;
  std::string period;
  std::string statistic;
  double value = 0.0;
};

// Quantiles and means per period for every requested indicator plus the
// mean half-width of each central interval the probabilities allow,
// exceedance probabilities, trend summaries and joint-event probabilities.
std::vector<SummaryRow> summarize(std::span<const PosteriorSample> samples, const SummaryRequest& request);
std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace recon
