#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recon/table.hpp"

namespace recon {

enum class Sex : int { Female = 0, Male = 1 };
inline constexpr std::array<Sex, 2> kSexes{Sex::Female, Sex::Male};
inline constexpr std::size_t idx(Sex s) { return static_cast<std::size_t>(s); }
inline constexpr char sex_code(Sex s) { return s == Sex::Female ? 'F' : 'M'; }

// Parameter classes that share one measurement-error variance.
enum class ParamClass : int { Count = 0, Fertility, Survival, Migration, Srb };
inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::array<ParamClass, kNumClasses> kClasses{
    ParamClass::Count, ParamClass::Fertility, ParamClass::Survival, ParamClass::Migration,
    ParamClass::Srb};
inline constexpr std::size_t idx(ParamClass c) { return static_cast<std::size_t>(c); }
std::string_view class_name(ParamClass c);  // "n", "f", "s", "g", "srb"
std::optional<ParamClass> parse_class(std::string_view name);

// Age/time frame. Ages are 5-year groups 0, 5, ..., A with [A, inf) open;
// periods are [t, t+5) for t = t0, ..., T-5.
struct ModelGrid {
  int t0 = 0;
  int T = 0;
  int step = 5;
  int A = 80;
  int fert_lo = 15;
  int fert_hi = 45;
  std::vector<int> census_years;

  int age_groups() const { return A / step + 1; }
  int periods() const { return (T - t0) / step; }
  int fertile_groups() const { return (fert_hi - fert_lo) / step + 1; }
  int fert_lo_index() const { return fert_lo / step; }
  int period_start(int p) const { return t0 + p * step; }
  // Index of an on-grid year in {t0, ..., T}; -1 if off grid or out of range.
  int year_index(int year) const;
  std::vector<int> period_starts() const;
  std::vector<int> stock_years() const;

  bool operator==(const ModelGrid&) const = default;
};

// Every structural problem with a grid; empty when the grid is usable.
std::vector<std::string> grid_violations(const ModelGrid& grid);
// Throws ValidationError listing grid_violations() if any.
void require_valid_grid(const ModelGrid& grid);

// All inputs to the projection. Rows are age groups, columns are periods.
struct ThetaVector {
  std::array<std::vector<double>, 2> baseline;  // K per sex
  Table fertility;                              // fertile groups x periods
  std::array<Table, 2> survival;                // (K + 1) x periods; last row is the open group
  std::array<Table, 2> migration;               // K x periods
  std::vector<double> srb;                      // periods

  static ThetaVector shaped(const ModelGrid& grid);
  bool operator==(const ThetaVector&) const = default;
};

// Initial (bias-reduced) estimates share the parameter shapes.
using InitialEstimates = ThetaVector;

struct VarianceParams {
  std::array<double, kNumClasses> sigma2{1.0, 1.0, 1.0, 1.0, 1.0};

  double& operator[](ParamClass c) { return sigma2[idx(c)]; }
  double operator[](ParamClass c) const { return sigma2[idx(c)]; }
  bool operator==(const VarianceParams&) const = default;
};

// Census counts by age group for each census year; counts[sex] is K x years.
struct CensusData {
  std::vector<int> years;
  std::array<Table, 2> counts;

  bool operator==(const CensusData&) const = default;
};

struct Elicitation {
  std::array<double, kNumClasses> alpha{0.5, 0.5, 0.5, 0.5, 0.5};
  std::array<double, kNumClasses> eta{0.1, 0.1, 0.1, 0.2, 0.1};

  bool operator==(const Elicitation&) const = default;
};

struct Violation {
  std::string rule;
  std::string where;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
  bool operator==(const ValidationReport&) const = default;
};

// Never throws; collects every violated invariant with its coordinates.
ValidationReport validate(const ModelGrid& grid, const ThetaVector& theta, const CensusData& census);
// Projection alone is defined for zero fertility; the model needs f > 0
// because fertility is log-transformed.
enum class FertilityBound { Positive, NonNegative };
ValidationReport validate_theta(const ModelGrid& grid, const ThetaVector& theta,
                                FertilityBound fertility = FertilityBound::Positive);
ValidationReport validate_census(const ModelGrid& grid, const CensusData& census);

// One scalar entry of ThetaVector.
struct Component {
  ParamClass cls;
  Sex sex;     // Female for the sexless classes (fertility, srb)
  int row;     // age-group row within the block (0 for srb)
  int period;  // period index; -1 for baseline counts

  // Earliest period whose projection depends on this entry.
  int first_period() const { return period < 0 ? 0 : period; }
};

// Fixed enumeration of every scalar in ThetaVector, with stable names such as
// "baseline[F,0]", "fertility[15,1960]", "survival[M,85,1960]",
// "migration[F,0,1965]" and "srb[1960]".
class ParamLayout {
 public:
  explicit ParamLayout(const ModelGrid& grid);

  std::size_t size() const { return components_.size(); }
  const Component& operator[](std::size_t i) const { return components_[i]; }
  const ModelGrid& grid() const { return grid_; }

  std::string name(std::size_t i) const;
  std::optional<std::size_t> find(std::string_view name) const;

  static double get(const ThetaVector& theta, const Component& c);
  static double& ref(ThetaVector& theta, const Component& c);

  std::vector<double> pack(const ThetaVector& theta) const;
  ThetaVector unpack(std::span<const double> values) const;

 private:
  ModelGrid grid_;
  std::vector<Component> components_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace recon
