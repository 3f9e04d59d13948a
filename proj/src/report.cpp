#include "recon/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "recon/error.hpp"
#include "recon/stats.hpp"

namespace recon {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : "nan";
}

double parse_double(std::string_view text, std::string_view whole) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("bad number '" + std::string(text) + "' in '" + std::string(whole) + "'");
  return v;
}

int parse_year(std::string_view text, std::string_view whole) {
  text = trim(text);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("bad year '" + std::string(text) + "' in '" + std::string(whole) + "'");
  return v;
}

struct Comparison {
  std::string_view lhs;
  Direction dir;
  double value;
};

Comparison split_comparison(std::string_view text) {
  const auto pos = text.find_first_of("<>");
  if (pos == std::string_view::npos)
    throw ValidationError("expected a comparison such as 'srb>1.06', got '" + std::string(text) + "'");
  const bool inclusive = pos + 1 < text.size() && text[pos + 1] == '=';
  Direction dir = text[pos] == '>' ? (inclusive ? Direction::AtLeast : Direction::Above)
                                   : (inclusive ? Direction::AtMost : Direction::Below);
  return {trim(text.substr(0, pos)), dir, parse_double(text.substr(pos + (inclusive ? 2 : 1)), text)};
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    out.push_back(trim(s.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) return out;
    start = end + 1;
  }
}

bool holds(double x, Direction dir, double t) {
  switch (dir) {
    case Direction::Above: return x > t;
    case Direction::AtLeast: return x >= t;
    case Direction::Below: return x < t;
    case Direction::AtMost: return x <= t;
  }
  return false;
}

std::string span_label(const TrajectoryMatrix& m, const TrendSpec& t) {
  const int a = t.from.value_or(m.years().front());
  const int b = t.to.value_or(m.years().back());
  return std::to_string(a) + "-" + std::to_string(b);
}

}  // namespace

std::string canonical_indicator(std::string_view name) {
  name = trim(name);
  for (const auto& known : indicator_names()) {
    if (known.size() != name.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size() && same; ++i)
      same = std::tolower(static_cast<unsigned char>(known[i])) == std::tolower(static_cast<unsigned char>(name[i]));
    if (same) return known;
  }
  std::string all;
  for (const auto& k : indicator_names()) all += (all.empty() ? "" : ", ") + k;
  throw ValidationError("unknown indicator '" + std::string(name) + "' (known: " + all + ")");
}

ThresholdSpec parse_threshold(std::string_view text) {
  const auto c = split_comparison(text);
  return {canonical_indicator(c.lhs), c.dir, c.value};
}

TrendSpec parse_trend(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2) throw ValidationError("trend spec '" + std::string(text) + "' needs indicator:kind");
  TrendSpec t;
  t.indicator = canonical_indicator(parts[0]);
  if (parts[1] == "diff") {
    t.kind = TrendSpec::Kind::Diff;
    if (parts.size() != 4) throw ValidationError("diff trend needs two years: '" + std::string(text) + "'");
  } else if (parts[1] == "slope") {
    t.kind = TrendSpec::Kind::Slope;
    if (parts.size() != 2 && parts.size() != 4)
      throw ValidationError("slope trend takes no years or two years: '" + std::string(text) + "'");
  } else {
    throw ValidationError("unknown trend kind '" + std::string(parts[1]) + "' (use diff or slope)");
  }
  if (parts.size() == 4) {
    t.from = parse_year(parts[2], text);
    t.to = parse_year(parts[3], text);
  }
  return t;
}

EventSpec parse_event(std::string_view text) {
  const auto c = split_comparison(trim(text));
  EventSpec e;
  e.dir = c.dir;
  e.value = c.value;
  if (const auto at = c.lhs.find('@'); at != std::string_view::npos) {
    e.indicator = canonical_indicator(c.lhs.substr(0, at));
    e.year = parse_year(c.lhs.substr(at + 1), text);
  } else if (c.lhs.find(':') != std::string_view::npos) {
    e.trend = parse_trend(c.lhs);
    e.indicator = e.trend->indicator;
  } else {
    throw ValidationError("event '" + std::string(text) +
                          "' must name a year (srb@1995>1.06) or a trend (srb:slope:1995:2005<0)");
  }
  return e;
}

std::vector<EventSpec> parse_joint(std::string_view text) {
  std::vector<EventSpec> out;
  for (auto part : split(text, '&')) out.push_back(parse_event(part));
  return out;
}

TrajectoryMatrix slice_years(const TrajectoryMatrix& m, int first, int last) {
  const std::size_t a = m.period_of(first);
  const std::size_t b = m.period_of(last);
  if (b < a) throw Error("year range " + std::to_string(first) + "-" + std::to_string(last) + " is reversed");
  std::vector<int> years(m.years().begin() + static_cast<std::ptrdiff_t>(a),
                         m.years().begin() + static_cast<std::ptrdiff_t>(b) + 1);
  TrajectoryMatrix out(m.name(), years, m.draws());
  for (std::size_t p = a; p <= b; ++p)
    for (std::size_t d = 0; d < m.draws(); ++d) out.at(d, p - a) = m.at(d, p);
  return out;
}

std::vector<double> trend_values(const TrajectoryMatrix& m, const TrendSpec& spec) {
  if (spec.kind == TrendSpec::Kind::Diff) return endpoint_diff(m, *spec.from, *spec.to);
  if (spec.from) return ols_slope(slice_years(m, *spec.from, *spec.to));
  return ols_slope(m);
}

std::vector<SummaryRow> summarize(std::span<const PosteriorSample> samples, const SummaryRequest& req) {
  std::map<std::string, TrajectoryMatrix> cache;
  auto matrix = [&](const std::string& name) -> const TrajectoryMatrix& {
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, indicator_trajectories(samples, name)).first;
    return it->second;
  };
  for (double p : req.probs)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probabilities must lie in [0, 1]");

  std::vector<SummaryRow> rows;
  for (const auto& raw : req.indicators) {
    const std::string name = canonical_indicator(raw);
    const auto& m = matrix(name);
    const auto q = marginal_quantiles(m, req.probs);
    for (std::size_t p = 0; p < m.periods(); ++p) {
      const std::string year = std::to_string(m.years()[p]);
      rows.push_back({name, year, "mean", mean(m.column(p))});
      for (std::size_t i = 0; i < req.probs.size(); ++i)
        rows.push_back({name, year, "q" + num(req.probs[i]), q.values(p, i)});
    }
    for (double lo : req.probs) {
      const double hi = 1.0 - lo;
      if (!(lo < 0.5) || std::find(req.probs.begin(), req.probs.end(), hi) == req.probs.end()) continue;
      rows.push_back({name, "all", "mean_half_width_" + num(std::round((hi - lo) * 1e6) / 1e4),
                      mean_half_width(q, lo, hi)});
    }
  }
  for (const auto& t : req.thresholds) {
    const auto& m = matrix(t.indicator);
    const auto probs = exceedance_prob(m, t.value, t.dir);
    const std::string stat = "P(" + std::string(direction_symbol(t.dir)) + num(t.value) + ")";
    for (std::size_t p = 0; p < m.periods(); ++p)
      rows.push_back({t.indicator, std::to_string(m.years()[p]), stat, probs[p]});
  }
  for (const auto& t : req.trends) {
    const auto& m = matrix(t.indicator);
    auto v = trend_values(m, t);
    const std::string label = span_label(m, t);
    const std::string kind = t.kind == TrendSpec::Kind::Diff ? "diff" : "slope";
    rows.push_back({t.indicator, label, kind + "_mean", mean(v)});
    std::sort(v.begin(), v.end());
    for (double p : req.probs) rows.push_back({t.indicator, label, kind + "_q" + num(p), quantile_sorted(v, p)});
    const auto positive = static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), 0.0));
    rows.push_back({t.indicator, label, kind + "_P(>0)", positive / static_cast<double>(v.size())});
  }
  for (const auto& text : req.joints) {
    const auto events = parse_joint(text);
    std::vector<std::vector<bool>> preds;
    for (const auto& e : events) {
      const auto& m = matrix(e.indicator);
      std::vector<double> v;
      if (e.year) {
        const auto col = m.column(m.period_of(*e.year));
        v.assign(col.begin(), col.end());
      } else {
        v = trend_values(m, *e.trend);
      }
      std::vector<bool> hit(v.size());
      for (std::size_t d = 0; d < v.size(); ++d) hit[d] = holds(v[d], e.dir, e.value);
      preds.push_back(std::move(hit));
    }
    rows.push_back({"joint", "all", std::string(trim(text)), joint_event_prob(preds)});
  }
  return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::string out = "indicator,period,statistic,value\n";
  for (const auto& r : rows) {
    std::string stat = r.statistic;
    if (stat.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : stat) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      stat = quoted + "\"";
    }
    out += r.indicator + "," + r.period + "," + stat + "," + num(r.value) + "\n";
  }
  return out;
}

}  // namespace recon
