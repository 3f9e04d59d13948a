#include "recon/summaries.hpp"

#include <algorithm>
#include <functional>

#include "recon/error.hpp"
#include "recon/indicators.hpp"
#include "recon/simd.hpp"
#include "recon/stats.hpp"

namespace recon {

TrajectoryMatrix::TrajectoryMatrix(std::string name, std::vector<int> years, std::size_t draws)
    : name_(std::move(name)), years_(std::move(years)), draws_(draws), values_(years_.size() * draws, 0.0) {}

TrajectoryMatrix TrajectoryMatrix::from_rows(std::string name, std::vector<int> years,
                                             const std::vector<std::vector<double>>& rows) {
  TrajectoryMatrix m(std::move(name), std::move(years), rows.size());
  for (std::size_t d = 0; d < rows.size(); ++d) {
    if (rows[d].size() != m.periods())
      throw Error("trajectory row " + std::to_string(d) + " has " + std::to_string(rows[d].size()) +
                  " values, expected " + std::to_string(m.periods()));
    for (std::size_t p = 0; p < m.periods(); ++p) m.at(d, p) = rows[d][p];
  }
  return m;
}

std::size_t TrajectoryMatrix::period_of(int year) const {
  auto it = std::find(years_.begin(), years_.end(), year);
  if (it == years_.end())
    throw Error("year " + std::to_string(year) + " not present in trajectory '" + name_ + "'");
  return static_cast<std::size_t>(it - years_.begin());
}

std::span<const double> QuantileTable::row(double prob) const {
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] == prob) return values.column(i);
  throw Error("probability " + std::to_string(prob) + " not in quantile table");
}

QuantileTable marginal_quantiles(const TrajectoryMatrix& m, std::span<const double> probs) {
  if (m.draws() == 0) throw Error("cannot take quantiles of an empty sample");
  QuantileTable out;
  out.probs.assign(probs.begin(), probs.end());
  out.years = m.years();
  out.values = Table(m.periods(), probs.size());
  std::vector<double> sorted;
  for (std::size_t p = 0; p < m.periods(); ++p) {
    const auto col = m.column(p);
    sorted.assign(col.begin(), col.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < probs.size(); ++i) out.values(p, i) = quantile_sorted(sorted, probs[i]);
  }
  return out;
}

double mean_half_width(std::span<const double> lower, std::span<const double> upper) {
  if (lower.size() != upper.size()) throw Error("lower and upper limits differ in length");
  if (lower.empty()) throw Error("no intervals to average");
  double total = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) total += (upper[i] - lower[i]) / 2.0;
  return total / static_cast<double>(lower.size());
}

double mean_half_width(const QuantileTable& table, double lower_prob, double upper_prob) {
  return mean_half_width(table.row(lower_prob), table.row(upper_prob));
}

std::string_view direction_symbol(Direction d) {
  switch (d) {
    case Direction::Above: return ">";
    case Direction::AtLeast: return ">=";
    case Direction::Below: return "<";
    case Direction::AtMost: return "<=";
  }
  return "?";
}

std::vector<double> exceedance_prob(const TrajectoryMatrix& m, double threshold, Direction dir) {
  if (m.draws() == 0) throw Error("cannot compute probabilities from an empty sample");
  std::vector<double> out(m.periods());
  const auto n = static_cast<double>(m.draws());
  for (std::size_t p = 0; p < m.periods(); ++p) {
    const auto col = m.column(p);
    std::size_t hits = 0;
    switch (dir) {
      case Direction::Above: hits = simd::count_above(col, threshold, false); break;
      case Direction::AtLeast: hits = simd::count_above(col, threshold, true); break;
      case Direction::Below: hits = col.size() - simd::count_above(col, threshold, true); break;
      case Direction::AtMost: hits = col.size() - simd::count_above(col, threshold, false); break;
    }
    out[p] = static_cast<double>(hits) / n;
  }
  return out;
}

std::vector<double> endpoint_diff(const TrajectoryMatrix& m, int year_a, int year_b) {
  const auto a = m.column(m.period_of(year_a));
  const auto b = m.column(m.period_of(year_b));
  std::vector<double> out(m.draws());
  for (std::size_t d = 0; d < m.draws(); ++d) out[d] = b[d] - a[d];
  return out;
}

std::vector<double> ols_slope(const TrajectoryMatrix& m) {
  if (m.periods() < 2) throw Error("OLS slope needs at least two years");
  const auto P = m.periods();
  double x_bar = 0.0;
  for (int y : m.years()) x_bar += y;
  x_bar /= static_cast<double>(P);
  std::vector<double> dx(P);
  double sxx = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    dx[p] = m.years()[p] - x_bar;
    sxx += dx[p] * dx[p];
  }
  if (sxx == 0.0) throw Error("OLS slope needs at least two distinct years");
  std::vector<double> out(m.draws());
  for (std::size_t d = 0; d < m.draws(); ++d) {
    double y_bar = 0.0;
    for (std::size_t p = 0; p < P; ++p) y_bar += m.at(d, p);
    y_bar /= static_cast<double>(P);
    double sxy = 0.0;
    for (std::size_t p = 0; p < P; ++p) sxy += dx[p] * (m.at(d, p) - y_bar);
    out[d] = sxy / sxx;
  }
  return out;
}

double joint_event_prob(const std::vector<std::vector<bool>>& predicates) {
  if (predicates.empty()) throw Error("no predicates given");
  const std::size_t n = predicates.front().size();
  for (const auto& p : predicates)
    if (p.size() != n) throw Error("predicates evaluated on different numbers of draws");
  if (n == 0) throw Error("cannot compute probabilities from an empty sample");
  std::size_t hits = 0;
  for (std::size_t d = 0; d < n; ++d) {
    bool all = true;
    for (const auto& p : predicates) all = all && p[d];
    hits += all ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

enum class Kind { Period, Stock };

struct IndicatorDef {
  std::string name;
  std::string units;
  Kind kind;
  bool needs_projection;
  // Value at period / year index i.
  std::function<double(const ThetaVector&, const Trajectory*, std::size_t)> eval;
};

const std::vector<IndicatorDef>& definitions() {
  static const std::vector<IndicatorDef> defs = [] {
    std::vector<IndicatorDef> d;
    d.push_back({"srb", "male births per female birth", Kind::Period, false,
                 [](const ThetaVector& t, const Trajectory*, std::size_t p) { return t.srb[p]; }});
    d.push_back({"tfr", "children per woman", Kind::Period, false,
                 [](const ThetaVector& t, const Trajectory*, std::size_t p) {
                   return tfr(t.fertility.column(p));
                 }});
    for (Sex s : kSexes) {
      const std::string tag(1, sex_code(s));
      d.push_back({"e0_" + tag, "years", Kind::Period, false,
                   [s](const ThetaVector& t, const Trajectory*, std::size_t p) {
                     return life_expectancy(t.survival[idx(s)].column(p));
                   }});
      d.push_back({"u5mr_" + tag, "deaths per 1000 births", Kind::Period, false,
                   [s](const ThetaVector& t, const Trajectory*, std::size_t p) {
                     return u5mr(t.survival[idx(s)](0, p));
                   }});
      d.push_back({"net_migrants_" + tag, "persons per year", Kind::Period, true,
                   [s](const ThetaVector& t, const Trajectory* traj, std::size_t p) {
                     return avg_annual_net_migrants(traj->states[p].of(s), t.migration[idx(s)].column(p));
                   }});
    }
    d.push_back({"e0_diff", "years", Kind::Period, false,
                 [](const ThetaVector& t, const Trajectory*, std::size_t p) {
                   return sex_diff_e0(t, static_cast<int>(p));
                 }});
    d.push_back({"sru5mr", "ratio", Kind::Period, false,
                 [](const ThetaVector& t, const Trajectory*, std::size_t p) {
                   return sex_ratio_u5mr(t, static_cast<int>(p));
                 }});
    d.push_back({"srtp", "males per female", Kind::Stock, true,
                 [](const ThetaVector&, const Trajectory* traj, std::size_t i) {
                   return srtp(traj->states[i]);
                 }});
    d.push_back({"sru5", "males per female", Kind::Stock, true,
                 [](const ThetaVector&, const Trajectory* traj, std::size_t i) {
                   return sru5(traj->states[i]);
                 }});
    return d;
  }();
  return defs;
}

const IndicatorDef* find_def(std::string_view name) {
  for (const auto& d : definitions())
    if (d.name == name) return &d;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& indicator_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& d : definitions()) out.push_back(d.name);
    return out;
  }();
  return names;
}

bool is_indicator(std::string_view name) { return find_def(name) != nullptr; }

std::string_view indicator_units(std::string_view name) {
  const auto* d = find_def(name);
  if (!d) throw Error("unknown indicator '" + std::string(name) + "'");
  return d->units;
}

TrajectoryMatrix indicator_trajectories(std::span<const PosteriorSample> samples, std::string_view name) {
  const IndicatorDef* def = find_def(name);
  if (!def) throw Error("unknown indicator '" + std::string(name) + "'");
  if (samples.empty()) throw Error("no samples given");
  const ModelGrid& grid = samples.front().grid;
  std::size_t total = 0;
  for (const auto& s : samples) {
    if (!(s.grid == grid)) throw Error("samples were drawn on different grids");
    total += s.size();
  }
  const ParamLayout layout(grid);
  std::vector<int> years = def->kind == Kind::Period ? grid.period_starts() : grid.stock_years();
  TrajectoryMatrix out(def->name, years, total);
  std::size_t row = 0;
  for (const auto& s : samples) {
    for (std::size_t d = 0; d < s.size(); ++d, ++row) {
      const ThetaVector theta = layout.unpack(s.draw(d));
      Trajectory traj;
      if (def->needs_projection) traj = project_full(theta, grid);
      for (std::size_t i = 0; i < years.size(); ++i)
        out.at(row, i) = def->eval(theta, def->needs_projection ? &traj : nullptr, i);
    }
  }
  return out;
}

TrajectoryMatrix indicator_trajectories(const PosteriorSample& sample, std::string_view name) {
  return indicator_trajectories(std::span<const PosteriorSample>(&sample, 1), name);
}

}  // namespace recon
