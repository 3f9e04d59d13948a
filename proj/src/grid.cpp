#include "recon/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "recon/error.hpp"

namespace recon {

namespace {

std::string coord(std::initializer_list<std::pair<const char*, std::string>> parts) {
  std::string out;
  for (const auto& [key, value] : parts) {
    if (!out.empty()) out += ", ";
    out += key;
    out += "=";
    out += value;
  }
  return out;
}

std::string str(int v) { return std::to_string(v); }
std::string str(Sex s) { return std::string(1, sex_code(s)); }

bool on_step(int years, int step) { return step > 0 && years % step == 0; }

}  // namespace

std::string_view class_name(ParamClass c) {
  switch (c) {
    case ParamClass::Count: return "n";
    case ParamClass::Fertility: return "f";
    case ParamClass::Survival: return "s";
    case ParamClass::Migration: return "g";
    case ParamClass::Srb: return "srb";
  }
  return "?";
}

std::optional<ParamClass> parse_class(std::string_view name) {
  for (ParamClass c : kClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

int ModelGrid::year_index(int year) const {
  if (year < t0 || year > T || !on_step(year - t0, step)) return -1;
  return (year - t0) / step;
}

std::vector<int> ModelGrid::period_starts() const {
  std::vector<int> out;
  for (int p = 0; p < periods(); ++p) out.push_back(period_start(p));
  return out;
}

std::vector<int> ModelGrid::stock_years() const {
  std::vector<int> out;
  for (int y = t0; y <= T; y += step) out.push_back(y);
  return out;
}

std::vector<std::string> grid_violations(const ModelGrid& g) {
  std::vector<std::string> out;
  if (g.step != 5) out.push_back("step must be 5 years (got " + str(g.step) + ")");
  if (g.T <= g.t0) out.push_back("T (" + str(g.T) + ") must exceed t0 (" + str(g.t0) + ")");
  if (g.step > 0 && (g.T - g.t0) % g.step != 0)
    out.push_back("T - t0 must be a multiple of " + str(g.step));
  if (g.A <= 0 || !on_step(g.A, g.step))
    out.push_back("A must be a positive multiple of " + str(g.step) + " (got " + str(g.A) + ")");
  if (g.fert_lo > g.fert_hi) out.push_back("fert_lo must not exceed fert_hi");
  for (auto [label, v] : {std::pair{"fert_lo", g.fert_lo}, std::pair{"fert_hi", g.fert_hi}}) {
    if (v < 0 || v > g.A || !on_step(v, g.step))
      out.push_back(std::string(label) + " must be a multiple of " + str(g.step) + " in [0, A] (got " +
                    str(v) + ")");
  }
  if (!std::is_sorted(g.census_years.begin(), g.census_years.end()) ||
      std::adjacent_find(g.census_years.begin(), g.census_years.end()) != g.census_years.end())
    out.push_back("census years must be strictly increasing");
  for (int y : g.census_years) {
    if (g.year_index(y) < 0)
      out.push_back("census year " + str(y) + " is not on the " + str(g.step) +
                    "-year grid starting at " + str(g.t0));
  }
  auto has = [&](int y) {
    return std::find(g.census_years.begin(), g.census_years.end(), y) != g.census_years.end();
  };
  if (!has(g.t0)) out.push_back("t0 (" + str(g.t0) + ") must be a census year");
  if (!has(g.T)) out.push_back("T (" + str(g.T) + ") must be a census year");
  return out;
}

void require_valid_grid(const ModelGrid& grid) {
  auto problems = grid_violations(grid);
  if (problems.empty()) return;
  std::string msg = "invalid grid:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ValidationError(msg);
}

ThetaVector ThetaVector::shaped(const ModelGrid& grid) {
  const auto K = static_cast<std::size_t>(grid.age_groups());
  const auto P = static_cast<std::size_t>(grid.periods());
  ThetaVector theta;
  for (Sex s : kSexes) {
    theta.baseline[idx(s)].assign(K, 0.0);
    theta.survival[idx(s)] = Table(K + 1, P);
    theta.migration[idx(s)] = Table(K, P);
  }
  theta.fertility = Table(static_cast<std::size_t>(grid.fertile_groups()), P);
  theta.srb.assign(P, 0.0);
  return theta;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "pass";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (const auto& v : violations) {
    os << "\n  " << v.rule;
    if (!v.where.empty()) os << " at " << v.where;
  }
  return os.str();
}

namespace {

void check_grid(const ModelGrid& grid, ValidationReport& report) {
  for (auto& msg : grid_violations(grid)) report.violations.push_back({std::move(msg), "grid"});
}

bool shapes_usable(const ModelGrid& grid) { return grid_violations(grid).empty(); }

}  // namespace

ValidationReport validate_theta(const ModelGrid& grid, const ThetaVector& theta, FertilityBound fertility) {
  ValidationReport report;
  check_grid(grid, report);
  if (!shapes_usable(grid)) return report;

  const auto K = static_cast<std::size_t>(grid.age_groups());
  const auto P = static_cast<std::size_t>(grid.periods());
  auto& v = report.violations;
  auto shape = [&](const char* block, std::size_t got_r, std::size_t got_c, std::size_t want_r,
                   std::size_t want_c) {
    if (got_r == want_r && got_c == want_c) return true;
    v.push_back({std::string(block) + " has shape " + std::to_string(got_r) + "x" +
                     std::to_string(got_c) + ", expected " + std::to_string(want_r) + "x" +
                     std::to_string(want_c),
                 block});
    return false;
  };

  for (Sex s : kSexes) {
    const auto& base = theta.baseline[idx(s)];
    if (shape("baseline", base.size(), 1, K, 1)) {
      for (std::size_t a = 0; a < K; ++a) {
        if (!(std::isfinite(base[a]) && base[a] >= 0.0))
          v.push_back({"baseline count must be finite and >= 0",
                       coord({{"sex", str(s)}, {"age", str(static_cast<int>(a) * grid.step)}})});
      }
    }
    const auto& surv = theta.survival[idx(s)];
    if (shape("survival", surv.rows(), surv.cols(), K + 1, P)) {
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t a = 0; a <= K; ++a) {
          double x = surv(a, p);
          if (!(x > 0.0 && x < 1.0))
            v.push_back({"survival must lie strictly inside (0, 1)",
                         coord({{"sex", str(s)},
                                {"age", str(static_cast<int>(a) * grid.step)},
                                {"year", str(grid.period_start(static_cast<int>(p)))}})});
        }
    }
    const auto& mig = theta.migration[idx(s)];
    if (shape("migration", mig.rows(), mig.cols(), K, P)) {
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t a = 0; a < K; ++a)
          if (!std::isfinite(mig(a, p)))
            v.push_back({"migration must be finite",
                         coord({{"sex", str(s)},
                                {"age", str(static_cast<int>(a) * grid.step)},
                                {"year", str(grid.period_start(static_cast<int>(p)))}})});
    }
  }
  const auto& fert = theta.fertility;
  if (shape("fertility", fert.rows(), fert.cols(), static_cast<std::size_t>(grid.fertile_groups()),
            P)) {
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t a = 0; a < fert.rows(); ++a)
        if (!(std::isfinite(fert(a, p)) &&
              (fert(a, p) > 0.0 || (fertility == FertilityBound::NonNegative && fert(a, p) == 0.0))))
          v.push_back({fertility == FertilityBound::Positive ? "fertility must be finite and > 0"
                                                             : "fertility must be finite and >= 0",
                       coord({{"age", str(grid.fert_lo + static_cast<int>(a) * grid.step)},
                              {"year", str(grid.period_start(static_cast<int>(p)))}})});
  }
  if (shape("srb", theta.srb.size(), 1, P, 1)) {
    for (std::size_t p = 0; p < P; ++p)
      if (!(std::isfinite(theta.srb[p]) && theta.srb[p] > 0.0))
        v.push_back({"srb must be finite and > 0",
                     coord({{"year", str(grid.period_start(static_cast<int>(p)))}})});
  }
  return report;
}

ValidationReport validate_census(const ModelGrid& grid, const CensusData& census) {
  ValidationReport report;
  check_grid(grid, report);
  if (!shapes_usable(grid)) return report;

  auto& v = report.violations;
  const auto K = static_cast<std::size_t>(grid.age_groups());
  for (int y : census.years) {
    if (grid.year_index(y) < 0) {
      v.push_back({"census year is not on the projection grid", coord({{"year", str(y)}})});
    } else if (std::find(grid.census_years.begin(), grid.census_years.end(), y) ==
               grid.census_years.end()) {
      v.push_back({"census year is not listed in the grid's census years", coord({{"year", str(y)}})});
    }
  }
  for (int y : grid.census_years) {
    if (y == grid.t0) continue;
    if (std::find(census.years.begin(), census.years.end(), y) == census.years.end())
      v.push_back({"grid census year has no census counts", coord({{"year", str(y)}})});
  }
  for (Sex s : kSexes) {
    const auto& c = census.counts[idx(s)];
    if (c.rows() != K || c.cols() != census.years.size()) {
      v.push_back({"census counts have shape " + std::to_string(c.rows()) + "x" +
                       std::to_string(c.cols()) + ", expected " + std::to_string(K) + "x" +
                       std::to_string(census.years.size()),
                   coord({{"sex", str(s)}})});
      continue;
    }
    for (std::size_t j = 0; j < c.cols(); ++j)
      for (std::size_t a = 0; a < K; ++a)
        if (!(std::isfinite(c(a, j)) && c(a, j) > 0.0))
          v.push_back({"census count must be finite and > 0",
                       coord({{"sex", str(s)},
                              {"age", str(static_cast<int>(a) * grid.step)},
                              {"year", str(census.years[j])}})});
  }
  return report;
}

ValidationReport validate(const ModelGrid& grid, const ThetaVector& theta, const CensusData& census) {
  ValidationReport report = validate_theta(grid, theta);
  auto c = validate_census(grid, census);
  // Grid problems are reported once.
  for (auto& item : c.violations)
    if (item.where != "grid") report.violations.push_back(std::move(item));
  return report;
}

ParamLayout::ParamLayout(const ModelGrid& grid) : grid_(grid) {
  require_valid_grid(grid);
  const int K = grid.age_groups();
  const int P = grid.periods();
  for (Sex s : kSexes)
    for (int a = 0; a < K; ++a) components_.push_back({ParamClass::Count, s, a, -1});
  for (int p = 0; p < P; ++p)
    for (int a = 0; a < grid.fertile_groups(); ++a)
      components_.push_back({ParamClass::Fertility, Sex::Female, a, p});
  for (Sex s : kSexes)
    for (int p = 0; p < P; ++p)
      for (int a = 0; a <= K; ++a) components_.push_back({ParamClass::Survival, s, a, p});
  for (Sex s : kSexes)
    for (int p = 0; p < P; ++p)
      for (int a = 0; a < K; ++a) components_.push_back({ParamClass::Migration, s, a, p});
  for (int p = 0; p < P; ++p) components_.push_back({ParamClass::Srb, Sex::Female, 0, p});
  for (std::size_t i = 0; i < components_.size(); ++i) index_.emplace(name(i), i);
}

std::string ParamLayout::name(std::size_t i) const {
  const Component& c = components_.at(i);
  const std::string sex(1, sex_code(c.sex));
  const std::string age = std::to_string(c.row * grid_.step);
  const std::string year = c.period >= 0 ? std::to_string(grid_.period_start(c.period)) : "";
  switch (c.cls) {
    case ParamClass::Count: return "baseline[" + sex + "," + age + "]";
    case ParamClass::Fertility:
      return "fertility[" + std::to_string(grid_.fert_lo + c.row * grid_.step) + "," + year + "]";
    case ParamClass::Survival: return "survival[" + sex + "," + age + "," + year + "]";
    case ParamClass::Migration: return "migration[" + sex + "," + age + "," + year + "]";
    case ParamClass::Srb: return "srb[" + year + "]";
  }
  return {};
}

std::optional<std::size_t> ParamLayout::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double ParamLayout::get(const ThetaVector& theta, const Component& c) {
  const auto r = static_cast<std::size_t>(c.row);
  const auto p = static_cast<std::size_t>(c.period);
  switch (c.cls) {
    case ParamClass::Count: return theta.baseline[idx(c.sex)][r];
    case ParamClass::Fertility: return theta.fertility(r, p);
    case ParamClass::Survival: return theta.survival[idx(c.sex)](r, p);
    case ParamClass::Migration: return theta.migration[idx(c.sex)](r, p);
    case ParamClass::Srb: return theta.srb[p];
  }
  return 0.0;
}

double& ParamLayout::ref(ThetaVector& theta, const Component& c) {
  const auto r = static_cast<std::size_t>(c.row);
  const auto p = static_cast<std::size_t>(c.period);
  switch (c.cls) {
    case ParamClass::Count: return theta.baseline[idx(c.sex)][r];
    case ParamClass::Fertility: return theta.fertility(r, p);
    case ParamClass::Survival: return theta.survival[idx(c.sex)](r, p);
    case ParamClass::Migration: return theta.migration[idx(c.sex)](r, p);
    case ParamClass::Srb: break;
  }
  return theta.srb[p];
}

std::vector<double> ParamLayout::pack(const ThetaVector& theta) const {
  std::vector<double> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(get(theta, c));
  return out;
}

ThetaVector ParamLayout::unpack(std::span<const double> values) const {
  if (values.size() != components_.size())
    throw Error("parameter vector has " + std::to_string(values.size()) + " entries, layout expects " +
                std::to_string(components_.size()));
  ThetaVector theta = ThetaVector::shaped(grid_);
  for (std::size_t i = 0; i < components_.size(); ++i) ref(theta, components_[i]) = values[i];
  return theta;
}

}  // namespace recon
