#include "recon/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "recon/error.hpp"
#include "recon/simd.hpp"

#ifndef RECON_VERSION
#define RECON_VERSION "0.0.0"
#endif

namespace recon::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Cell {
  std::string_view text;
  int column;  // 1-based character position
};

// Double-quoted cells may contain the separator; embedded quotes are not supported.
std::vector<Cell> split_cells(std::string_view line, char sep = ',') {
  std::vector<Cell> out;
  std::size_t start = 0;
  while (true) {
    std::size_t lead = start;
    while (lead < line.size() && (line[lead] == ' ' || line[lead] == '\t')) ++lead;
    std::size_t end;
    if (lead < line.size() && line[lead] == '"') {
      const std::size_t close = line.find('"', lead + 1);
      if (close == std::string_view::npos) {
        end = line.find(sep, lead);
        out.push_back({trim(line.substr(start, end == std::string_view::npos ? end : end - start)),
                       static_cast<int>(lead) + 1});
      } else {
        end = line.find(sep, close);
        out.push_back({line.substr(lead + 1, close - lead - 1), static_cast<int>(lead) + 1});
      }
    } else {
      end = line.find(sep, start);
      out.push_back({trim(line.substr(start, end == std::string_view::npos ? end : end - start)),
                     static_cast<int>(lead) + 1});
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string quoted(const std::string& s) {
  return s.find(',') == std::string::npos ? s : '"' + s + '"';
}

double parse_number(std::string_view text, const std::string& source, int line, int column) {
  if (text.empty()) throw ParseError(source, line, column, "empty cell where a number was expected");
  double v = 0.0;
  const char* first = text.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(source, line, column, "not a number: '" + std::string(text) + "'");
  return v;
}

long long parse_integer(std::string_view text, const std::string& source, int line, int column) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(source, line, column, "not an integer: '" + std::string(text) + "'");
  return v;
}

// CsvMatrix plus the positions needed for diagnostics.
struct LocatedMatrix {
  CsvMatrix m;
  std::string source;
  int header_line = 0;
  std::vector<int> header_columns;
  std::vector<int> row_lines;
};

LocatedMatrix parse_located(std::string_view text, const std::string& source) {
  LocatedMatrix out;
  out.source = source;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto cells = split_cells(line);
    if (out.header_line == 0) {
      out.header_line = line_no;
      out.m.corner = std::string(cells[0].text);
      for (std::size_t i = 1; i < cells.size(); ++i) {
        if (cells[i].text.empty()) throw ParseError(source, line_no, cells[i].column, "empty column label");
        out.m.col_labels.emplace_back(cells[i].text);
        out.header_columns.push_back(cells[i].column);
      }
      if (out.m.col_labels.empty()) throw ParseError(source, line_no, 1, "header has no value columns");
      continue;
    }
    if (cells.size() != out.m.col_labels.size() + 1)
      throw ParseError(source, line_no, cells.back().column,
                       "expected " + std::to_string(out.m.col_labels.size() + 1) + " cells, found " +
                           std::to_string(cells.size()));
    out.m.row_labels.emplace_back(cells[0].text);
    out.row_lines.push_back(line_no);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i)
      row.push_back(parse_number(cells[i].text, source, line_no, cells[i].column));
    rows.push_back(std::move(row));
  }
  if (out.header_line == 0) throw ParseError(source, 0, 0, "file is empty");
  out.m.values = Table(rows.size(), out.m.col_labels.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) out.m.values(r, c) = rows[r][c];
  return out;
}

LocatedMatrix read_located(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError(path.string(), 0, 0, "file not found");
  return parse_located(read_text(path), path.string());
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

// Checks labels against the expected row ages and column years.
void expect_labels(const LocatedMatrix& lm, const std::vector<int>& rows, const std::vector<int>& cols,
                   const char* row_kind, const char* col_kind) {
  const auto& m = lm.m;
  if (m.col_labels.size() != cols.size()) {
    throw ParseError(lm.source, lm.header_line, 1,
                     "expected " + std::to_string(cols.size()) + " " + col_kind + " column(s) (" +
                         join_ints(cols) + "), found " + std::to_string(m.col_labels.size()));
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto v = parse_integer(m.col_labels[c], lm.source, lm.header_line, lm.header_columns[c]);
    if (v != cols[c])
      throw ParseError(lm.source, lm.header_line, lm.header_columns[c],
                       std::string("expected ") + col_kind + " " + std::to_string(cols[c]) + ", found " +
                           m.col_labels[c]);
  }
  if (m.row_labels.size() != rows.size()) {
    const int line = lm.row_lines.empty() ? lm.header_line : lm.row_lines.back();
    throw ParseError(lm.source, line, 1,
                     "expected " + std::to_string(rows.size()) + " " + row_kind + " row(s) (" +
                         join_ints(rows) + "), found " + std::to_string(m.row_labels.size()));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = parse_integer(m.row_labels[r], lm.source, lm.row_lines[r], 1);
    if (v != rows[r])
      throw ParseError(lm.source, lm.row_lines[r], 1,
                       std::string("expected ") + row_kind + " " + std::to_string(rows[r]) + ", found " +
                           m.row_labels[r]);
  }
}

std::vector<int> ages(int first, int last, int step) {
  std::vector<int> out;
  for (int a = first; a <= last; a += step) out.push_back(a);
  return out;
}

CsvMatrix labelled(const std::vector<int>& rows, const std::vector<int>& cols, const std::string& corner) {
  CsvMatrix m;
  m.corner = corner;
  for (int r : rows) m.row_labels.push_back(std::to_string(r));
  for (int c : cols) m.col_labels.push_back(std::to_string(c));
  m.values = Table(rows.size(), cols.size());
  return m;
}

std::string sex_file(const char* stem, Sex s) { return std::string(stem) + "_" + sex_code(s) + ".csv"; }

template <typename T>
T parse_value(const ConfigEntry& e, const std::string& source, const std::string& key);

template <>
double parse_value<double>(const ConfigEntry& e, const std::string& source, const std::string&) {
  return parse_number(trim(e.value), source, e.line, 1);
}
template <>
int parse_value<int>(const ConfigEntry& e, const std::string& source, const std::string& key) {
  const auto v = parse_integer(trim(e.value), source, e.line, 1);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ParseError(source, e.line, 1, key + " is out of range");
  return static_cast<int>(v);
}
template <>
bool parse_value<bool>(const ConfigEntry& e, const std::string& source, const std::string& key) {
  const auto v = trim(e.value);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ParseError(source, e.line, 1, key + " must be true or false");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  for (const auto& c : split_cells(s)) out.push_back(c.text);
  return out;
}

using Section = std::map<std::string, ConfigEntry>;

void reject_unknown(const Section& sec, const std::string& source, const std::string& section,
                    const std::vector<std::string>& known) {
  for (const auto& [key, entry] : sec) {
    bool ok = std::find(known.begin(), known.end(), key) != known.end();
    if (!ok)
      throw ParseError(source, entry.line, 1, "unknown key '" + key + "' in [" + section + "]");
  }
}

std::vector<std::string> class_keys(const std::string& prefix) {
  std::vector<std::string> out;
  for (ParamClass c : kClasses) out.push_back(prefix + "." + std::string(class_name(c)));
  return out;
}

std::string utc_iso(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ---- CSV -------------------------------------------------------------------

CsvMatrix parse_csv_matrix(std::string_view text, const std::string& source) {
  return parse_located(text, source).m;
}

CsvMatrix read_csv_matrix(const fs::path& path) { return read_located(path).m; }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

std::string format_csv_matrix(const CsvMatrix& m) {
  std::string out = m.corner;
  for (const auto& c : m.col_labels) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < m.row_labels.size(); ++r) {
    out += m.row_labels[r];
    for (std::size_t c = 0; c < m.col_labels.size(); ++c) out += "," + format_double(m.values(r, c));
    out += "\n";
  }
  return out;
}

void write_csv_matrix(const fs::path& path, const CsvMatrix& m) { write_text(path, format_csv_matrix(m)); }

// ---- config -------------------------------------------------------------------

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  static const std::vector<std::string> known{"grid", "elicitation", "sampler", "simulate"};
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(source, line_no, 1, "unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (std::find(known.begin(), known.end(), current) == known.end())
        throw ParseError(source, line_no, 2, "unknown section [" + current + "]");
      cfg.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, 1, "expected 'key = value'");
    if (current.empty()) throw ParseError(source, line_no, 1, "key outside of any [section]");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(source, line_no, 1, "empty key");
    auto& sec = cfg.sections_[current];
    if (sec.count(key)) throw ParseError(source, line_no, 1, "duplicate key '" + key + "'");
    sec[key] = ConfigEntry{std::string(trim(line.substr(eq + 1))), line_no};
  }
  return cfg;
}

Config Config::read(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError(path.string(), 0, 0, "file not found");
  return parse(read_text(path), path.string());
}

const std::map<std::string, ConfigEntry>* Config::section(const std::string& name) const {
  auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

ModelGrid grid_from_config(const Config& cfg) {
  const Section* sec = cfg.section("grid");
  if (!sec) throw ParseError(cfg.source(), 0, 0, "missing [grid] section");
  reject_unknown(*sec, cfg.source(), "grid", {"t0", "T", "A", "step", "fert_lo", "fert_hi", "census_years"});
  auto need = [&](const std::string& key) -> const ConfigEntry& {
    auto it = sec->find(key);
    if (it == sec->end()) throw ParseError(cfg.source(), 0, 0, "[grid] is missing required key '" + key + "'");
    return it->second;
  };
  ModelGrid g;
  g.t0 = parse_value<int>(need("t0"), cfg.source(), "t0");
  g.T = parse_value<int>(need("T"), cfg.source(), "T");
  if (sec->count("A")) g.A = parse_value<int>(sec->at("A"), cfg.source(), "A");
  if (sec->count("step")) g.step = parse_value<int>(sec->at("step"), cfg.source(), "step");
  if (sec->count("fert_lo")) g.fert_lo = parse_value<int>(sec->at("fert_lo"), cfg.source(), "fert_lo");
  if (sec->count("fert_hi")) g.fert_hi = parse_value<int>(sec->at("fert_hi"), cfg.source(), "fert_hi");
  const auto& cy = need("census_years");
  for (auto item : split_list(cy.value))
    g.census_years.push_back(static_cast<int>(parse_integer(item, cfg.source(), cy.line, 1)));
  return g;
}

Elicitation elicitation_from_config(const Config& cfg) {
  Elicitation e;
  const Section* sec = cfg.section("elicitation");
  if (!sec) return e;
  auto known = class_keys("alpha");
  auto etas = class_keys("eta");
  known.insert(known.end(), etas.begin(), etas.end());
  known.push_back("alpha");
  reject_unknown(*sec, cfg.source(), "elicitation", known);
  if (sec->count("alpha")) e.alpha.fill(parse_value<double>(sec->at("alpha"), cfg.source(), "alpha"));
  for (ParamClass c : kClasses) {
    const std::string name(class_name(c));
    if (auto it = sec->find("alpha." + name); it != sec->end())
      e.alpha[idx(c)] = parse_value<double>(it->second, cfg.source(), it->first);
    if (auto it = sec->find("eta." + name); it != sec->end())
      e.eta[idx(c)] = parse_value<double>(it->second, cfg.source(), it->first);
  }
  return e;
}

SamplerConfig sampler_from_config(const Config& cfg, SamplerConfig c) {
  const Section* sec = cfg.section("sampler");
  if (!sec) return c;
  auto known = class_keys("scale");
  auto s2 = class_keys("sigma2");
  known.insert(known.end(), s2.begin(), s2.end());
  for (const char* k : {"iterations", "burn_in", "thin", "chains", "seed", "target_accept", "adapt_rate",
                        "adapt_window", "update", "update_variances", "ridge_moves", "ridge_scale", "block_moves"})
    known.emplace_back(k);
  reject_unknown(*sec, cfg.source(), "sampler", known);
  const auto& src = cfg.source();
  auto get_int = [&](const char* key, int& out) {
    if (auto it = sec->find(key); it != sec->end()) out = parse_value<int>(it->second, src, key);
  };
  get_int("iterations", c.iterations);
  get_int("burn_in", c.burn_in);
  get_int("thin", c.thin);
  get_int("chains", c.chains);
  get_int("adapt_window", c.adapt_window);
  if (auto it = sec->find("seed"); it != sec->end()) {
    const auto v = parse_integer(trim(it->second.value), src, it->second.line, 1);
    if (v < 0) throw ParseError(src, it->second.line, 1, "seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(v);
  }
  if (auto it = sec->find("target_accept"); it != sec->end())
    c.target_accept = parse_value<double>(it->second, src, it->first);
  if (auto it = sec->find("adapt_rate"); it != sec->end())
    c.adapt_rate = parse_value<double>(it->second, src, it->first);
  if (auto it = sec->find("update_variances"); it != sec->end())
    c.update_variances = parse_value<bool>(it->second, src, it->first);
  if (auto it = sec->find("ridge_moves"); it != sec->end())
    c.ridge_moves = parse_value<bool>(it->second, src, it->first);
  if (auto it = sec->find("block_moves"); it != sec->end())
    c.block_moves = parse_value<bool>(it->second, src, it->first);
  if (auto it = sec->find("ridge_scale"); it != sec->end())
    c.ridge_scale = parse_value<double>(it->second, src, it->first);
  if (auto it = sec->find("update"); it != sec->end()) {
    c.update_class.fill(false);
    for (auto item : split_list(it->second.value)) {
      auto cls = parse_class(item);
      if (!cls) throw ParseError(src, it->second.line, 1, "unknown parameter class '" + std::string(item) + "'");
      c.update_class[idx(*cls)] = true;
    }
  }
  bool any_sigma = false;
  VarianceParams start;
  if (c.initial_variances) start = *c.initial_variances;
  for (ParamClass cls : kClasses) {
    const std::string name(class_name(cls));
    if (auto it = sec->find("scale." + name); it != sec->end())
      c.initial_scale[idx(cls)] = parse_value<double>(it->second, src, it->first);
    if (auto it = sec->find("sigma2." + name); it != sec->end()) {
      start[cls] = parse_value<double>(it->second, src, it->first);
      any_sigma = true;
    }
  }
  if (any_sigma) c.initial_variances = start;
  return c;
}

SimulateOptions simulate_options_from_config(const Config& cfg) {
  SimulateOptions o;
  const Section* sec = cfg.section("simulate");
  if (!sec) return o;
  auto known = class_keys("sigma2");
  known.push_back("max_attempts");
  reject_unknown(*sec, cfg.source(), "simulate", known);
  if (auto it = sec->find("max_attempts"); it != sec->end())
    o.max_attempts = parse_value<int>(it->second, cfg.source(), it->first);
  const auto s2 = class_keys("sigma2");
  const bool any = std::any_of(s2.begin(), s2.end(), [&](const std::string& k) { return sec->count(k) > 0; });
  if (any) {
    VarianceParams v;
    for (ParamClass c : kClasses) {
      const std::string key = "sigma2." + std::string(class_name(c));
      auto it = sec->find(key);
      if (it == sec->end())
        throw ParseError(cfg.source(), 0, 0, "[simulate] sets some sigma2 keys but not '" + key + "'");
      v[c] = parse_value<double>(it->second, cfg.source(), key);
    }
    o.variances = v;
  }
  return o;
}

std::string format_grid_config(const ModelGrid& g) {
  std::ostringstream os;
  os << "[grid]\n"
     << "t0 = " << g.t0 << "\nT = " << g.T << "\nA = " << g.A << "\nstep = " << g.step
     << "\nfert_lo = " << g.fert_lo << "\nfert_hi = " << g.fert_hi << "\ncensus_years = " << join_ints(g.census_years)
     << "\n";
  return os.str();
}

std::string format_elicitation_config(const Elicitation& e) {
  std::string out = "[elicitation]\n";
  for (ParamClass c : kClasses)
    out += "alpha." + std::string(class_name(c)) + " = " + format_double(e.alpha[idx(c)]) + "\n";
  for (ParamClass c : kClasses)
    out += "eta." + std::string(class_name(c)) + " = " + format_double(e.eta[idx(c)]) + "\n";
  return out;
}

// ---- parameter directories ------------------------------------------------------

std::vector<fs::path> theta_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (Sex s : kSexes) out.push_back(dir / sex_file("baseline", s));
  out.push_back(dir / "fertility.csv");
  for (Sex s : kSexes) out.push_back(dir / sex_file("survival", s));
  for (Sex s : kSexes) out.push_back(dir / sex_file("migration", s));
  out.push_back(dir / "srb.csv");
  return out;
}

std::vector<fs::path> census_files(const fs::path& dir) {
  return {dir / sex_file("census", Sex::Female), dir / sex_file("census", Sex::Male)};
}

ThetaVector read_theta_dir(const fs::path& dir, const ModelGrid& grid) {
  require_valid_grid(grid);
  ThetaVector theta = ThetaVector::shaped(grid);
  const auto age_rows = ages(0, grid.A, grid.step);
  const auto surv_rows = ages(0, grid.A + grid.step, grid.step);
  const auto fert_rows = ages(grid.fert_lo, grid.fert_hi, grid.step);
  const auto periods = grid.period_starts();
  for (Sex s : kSexes) {
    auto base = read_located(dir / sex_file("baseline", s));
    expect_labels(base, age_rows, {grid.t0}, "age", "year");
    auto col = base.m.values.column(0);
    theta.baseline[idx(s)].assign(col.begin(), col.end());

    auto surv = read_located(dir / sex_file("survival", s));
    expect_labels(surv, surv_rows, periods, "age", "period");
    theta.survival[idx(s)] = surv.m.values;

    auto mig = read_located(dir / sex_file("migration", s));
    expect_labels(mig, age_rows, periods, "age", "period");
    theta.migration[idx(s)] = mig.m.values;
  }
  auto fert = read_located(dir / "fertility.csv");
  expect_labels(fert, fert_rows, periods, "age", "period");
  theta.fertility = fert.m.values;

  auto srb = read_located(dir / "srb.csv");
  if (srb.m.row_labels.size() != 1 || srb.m.row_labels[0] != "srb")
    throw ParseError(srb.source, srb.row_lines.empty() ? srb.header_line : srb.row_lines[0], 1,
                     "srb.csv must contain exactly one row labelled 'srb'");
  {
    // Row label is not an age; check the columns only.
    LocatedMatrix cols_only = srb;
    cols_only.m.row_labels = {"0"};
    expect_labels(cols_only, {0}, periods, "row", "period");
  }
  auto srb_row = std::vector<double>(periods.size());
  for (std::size_t p = 0; p < periods.size(); ++p) srb_row[p] = srb.m.values(0, p);
  theta.srb = std::move(srb_row);
  return theta;
}

void write_theta_dir(const fs::path& dir, const ModelGrid& grid, const ThetaVector& theta) {
  fs::create_directories(dir);
  const auto age_rows = ages(0, grid.A, grid.step);
  const auto surv_rows = ages(0, grid.A + grid.step, grid.step);
  const auto fert_rows = ages(grid.fert_lo, grid.fert_hi, grid.step);
  const auto periods = grid.period_starts();
  for (Sex s : kSexes) {
    auto base = labelled(age_rows, {grid.t0}, "age");
    for (std::size_t a = 0; a < age_rows.size(); ++a) base.values(a, 0) = theta.baseline[idx(s)].at(a);
    write_csv_matrix(dir / sex_file("baseline", s), base);
    auto surv = labelled(surv_rows, periods, "age");
    surv.values = theta.survival[idx(s)];
    write_csv_matrix(dir / sex_file("survival", s), surv);
    auto mig = labelled(age_rows, periods, "age");
    mig.values = theta.migration[idx(s)];
    write_csv_matrix(dir / sex_file("migration", s), mig);
  }
  auto fert = labelled(fert_rows, periods, "age");
  fert.values = theta.fertility;
  write_csv_matrix(dir / "fertility.csv", fert);
  auto srb = labelled({0}, periods, "label");
  srb.row_labels = {"srb"};
  for (std::size_t p = 0; p < periods.size(); ++p) srb.values(0, p) = theta.srb.at(p);
  write_csv_matrix(dir / "srb.csv", srb);
}

CensusData read_census_dir(const fs::path& dir, const ModelGrid& grid) {
  require_valid_grid(grid);
  CensusData census;
  const auto age_rows = ages(0, grid.A, grid.step);
  for (Sex s : kSexes) {
    auto lm = read_located(dir / sex_file("census", s));
    std::vector<int> years;
    for (std::size_t c = 0; c < lm.m.col_labels.size(); ++c)
      years.push_back(static_cast<int>(parse_integer(lm.m.col_labels[c], lm.source, lm.header_line, lm.header_columns[c])));
    if (s == Sex::Female) {
      census.years = years;
    } else if (years != census.years) {
      throw ParseError(lm.source, lm.header_line, 1, "census years differ from " + sex_file("census", Sex::Female));
    }
    expect_labels(lm, age_rows, years, "age", "year");
    census.counts[idx(s)] = lm.m.values;
  }
  return census;
}

void write_census_dir(const fs::path& dir, const ModelGrid& grid, const CensusData& census) {
  fs::create_directories(dir);
  const auto age_rows = ages(0, grid.A, grid.step);
  for (Sex s : kSexes) {
    auto m = labelled(age_rows, census.years, "age");
    m.values = census.counts[idx(s)];
    write_csv_matrix(dir / sex_file("census", s), m);
  }
}

std::string format_trajectory(const Trajectory& traj, const ModelGrid& grid) {
  std::string out = "year,sex,age,count\n";
  for (const auto& st : traj.states)
    for (Sex s : kSexes) {
      const auto c = st.of(s);
      for (std::size_t a = 0; a < c.size(); ++a)
        out += std::to_string(st.year) + "," + sex_code(s) + "," + std::to_string(static_cast<int>(a) * grid.step) +
               "," + format_double(c[a]) + "\n";
    }
  return out;
}

// ---- manifests ----------------------------------------------------------------------

namespace {

nlohmann::json per_class(const std::array<double, kNumClasses>& v) {
  nlohmann::json j = nlohmann::json::object();
  for (ParamClass c : kClasses) j[std::string(class_name(c))] = v[idx(c)];
  return j;
}

std::array<double, kNumClasses> per_class_from(const nlohmann::json& j) {
  std::array<double, kNumClasses> out{};
  for (ParamClass c : kClasses) out[idx(c)] = j.at(std::string(class_name(c))).get<double>();
  return out;
}

nlohmann::json grid_json(const ModelGrid& g) {
  return {{"t0", g.t0}, {"T", g.T}, {"A", g.A}, {"step", g.step}, {"fert_lo", g.fert_lo},
          {"fert_hi", g.fert_hi}, {"census_years", g.census_years}};
}

ModelGrid grid_from(const nlohmann::json& j) {
  ModelGrid g;
  g.t0 = j.at("t0");
  g.T = j.at("T");
  g.A = j.at("A");
  g.step = j.at("step");
  g.fert_lo = j.at("fert_lo");
  g.fert_hi = j.at("fert_hi");
  g.census_years = j.at("census_years").get<std::vector<int>>();
  return g;
}

nlohmann::json sampler_json(const SamplerConfig& c) {
  nlohmann::json j{{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
                   {"initial_scale", per_class(c.initial_scale)}, {"adapt_window", c.adapt_window},
                   {"target_accept", c.target_accept}, {"adapt_rate", c.adapt_rate}, {"seed", c.seed},
                   {"chains", c.chains}, {"update_variances", c.update_variances},
                   {"ridge_moves", c.ridge_moves}, {"ridge_scale", c.ridge_scale}, {"block_moves", c.block_moves}};
  nlohmann::json upd = nlohmann::json::object();
  for (ParamClass cls : kClasses) upd[std::string(class_name(cls))] = c.update_class[idx(cls)];
  j["update_class"] = upd;
  if (c.initial_variances) j["initial_variances"] = per_class(c.initial_variances->sigma2);
  return j;
}

SamplerConfig sampler_from(const nlohmann::json& j) {
  SamplerConfig c;
  c.iterations = j.at("iterations");
  c.burn_in = j.at("burn_in");
  c.thin = j.at("thin");
  c.initial_scale = per_class_from(j.at("initial_scale"));
  c.adapt_window = j.at("adapt_window");
  c.target_accept = j.at("target_accept");
  c.adapt_rate = j.at("adapt_rate");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.chains = j.at("chains");
  c.update_variances = j.at("update_variances");
  c.ridge_moves = j.at("ridge_moves");
  c.ridge_scale = j.at("ridge_scale");
  c.block_moves = j.at("block_moves");
  for (ParamClass cls : kClasses) c.update_class[idx(cls)] = j.at("update_class").at(std::string(class_name(cls)));
  if (j.contains("initial_variances")) c.initial_variances = VarianceParams{per_class_from(j.at("initial_variances"))};
  return c;
}

}  // namespace

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j{{"command", m.command},
                   {"software_version", m.software_version},
                   {"simd_level", m.simd_level},
                   {"started_at", m.started_at},
                   {"wall_seconds", m.wall_seconds},
                   {"grid", grid_json(m.grid)},
                   {"chain_seeds", m.chain_seeds},
                   {"census_likelihood", m.census_likelihood},
                   {"input_digests", m.input_digests},
                   {"extra", m.extra}};
  if (m.sampler) j["sampler"] = sampler_json(*m.sampler);
  if (m.elicitation)
    j["elicitation"] = {{"alpha", per_class(m.elicitation->alpha)}, {"eta", per_class(m.elicitation->eta)}};
  if (m.hyper) j["hyperparameters"] = {{"alpha", per_class(m.hyper->alpha)}, {"beta", per_class(m.hyper->beta)}};
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.value("command", "");
  m.software_version = j.value("software_version", "");
  m.simd_level = j.value("simd_level", "");
  m.started_at = j.value("started_at", "");
  m.wall_seconds = j.value("wall_seconds", 0.0);
  m.grid = grid_from(j.at("grid"));
  if (j.contains("sampler")) m.sampler = sampler_from(j.at("sampler"));
  if (j.contains("elicitation")) {
    Elicitation e;
    e.alpha = per_class_from(j.at("elicitation").at("alpha"));
    e.eta = per_class_from(j.at("elicitation").at("eta"));
    m.elicitation = e;
  }
  if (j.contains("hyperparameters")) {
    HyperParams h;
    h.alpha = per_class_from(j.at("hyperparameters").at("alpha"));
    h.beta = per_class_from(j.at("hyperparameters").at("beta"));
    m.hyper = h;
  }
  if (j.contains("chain_seeds")) m.chain_seeds = j.at("chain_seeds").get<std::vector<std::uint64_t>>();
  m.census_likelihood = j.value("census_likelihood", true);
  if (j.contains("input_digests")) m.input_digests = j.at("input_digests").get<std::map<std::string, std::string>>();
  if (j.contains("extra")) m.extra = j.at("extra");
  return m;
}

void write_manifest(const fs::path& path, const RunManifest& m) { write_text(path, to_json(m).dump(2) + "\n"); }

RunManifest read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError(path.string(), 0, 0, "file not found");
  try {
    return manifest_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, 0, std::string("malformed manifest: ") + e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string software_version() { return RECON_VERSION; }

std::string utc_timestamp() { return utc_iso(std::chrono::system_clock::now()); }

// ---- samples ----------------------------------------------------------------------

void write_samples_csv(const fs::path& path, const std::vector<PosteriorSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "chain,draw,parameter,value\n";
  if (samples.empty()) return;
  const ParamLayout layout(samples.front().grid);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < layout.size(); ++i) names.push_back(quoted(layout.name(i)));
  std::string buf;
  for (const auto& s : samples) {
    const std::string chain = std::to_string(s.chain);
    for (std::size_t d = 0; d < s.size(); ++d) {
      buf.clear();
      const std::string prefix = chain + "," + std::to_string(d) + ",";
      const auto draw = s.draw(d);
      for (std::size_t i = 0; i < draw.size(); ++i) buf += prefix + names[i] + "," + format_double(draw[i]) + "\n";
      for (ParamClass c : kClasses)
        buf += prefix + "sigma2[" + std::string(class_name(c)) + "]," + format_double(s.variances[d][c]) + "\n";
      out << buf;
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<PosteriorSample> read_samples_csv(const fs::path& path, const RunManifest& manifest) {
  const std::string text = read_text(path);
  const std::string source = path.string();
  const ParamLayout layout(manifest.grid);
  const std::size_t width = layout.size();
  std::map<int, PosteriorSample> chains;

  int line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (header) {
      if (cells.size() != 4 || cells[0].text != "chain" || cells[1].text != "draw" || cells[2].text != "parameter" ||
          cells[3].text != "value")
        throw ParseError(source, line_no, 1, "expected header 'chain,draw,parameter,value'");
      header = false;
      continue;
    }
    if (cells.size() != 4) throw ParseError(source, line_no, 1, "expected 4 cells");
    const int chain = static_cast<int>(parse_integer(cells[0].text, source, line_no, cells[0].column));
    const auto draw = static_cast<std::size_t>(parse_integer(cells[1].text, source, line_no, cells[1].column));
    const double value = parse_number(cells[3].text, source, line_no, cells[3].column);
    auto [it, fresh] = chains.try_emplace(chain);
    PosteriorSample& s = it->second;
    if (fresh) {
      s.grid = manifest.grid;
      s.chain = chain;
      s.width = width;
      if (manifest.sampler) s.config = *manifest.sampler;
      if (static_cast<std::size_t>(chain) < manifest.chain_seeds.size())
        s.chain_seed = manifest.chain_seeds[static_cast<std::size_t>(chain)];
    }
    if (draw == s.size()) {
      s.theta.resize((draw + 1) * width, std::numeric_limits<double>::quiet_NaN());
      s.variances.emplace_back();
      for (double& v : s.variances.back().sigma2) v = std::numeric_limits<double>::quiet_NaN();
    } else if (draw + 1 != s.size()) {
      throw ParseError(source, line_no, cells[1].column, "draws must appear in order");
    }
    const std::string_view name = cells[2].text;
    if (name.starts_with("sigma2[") && name.ends_with("]")) {
      auto cls = parse_class(name.substr(7, name.size() - 8));
      if (!cls) throw ParseError(source, line_no, cells[2].column, "unknown variance '" + std::string(name) + "'");
      s.variances[draw][*cls] = value;
    } else {
      auto i = layout.find(name);
      if (!i) throw ParseError(source, line_no, cells[2].column, "unknown parameter '" + std::string(name) + "'");
      s.theta[draw * width + *i] = value;
    }
  }
  std::vector<PosteriorSample> out;
  for (auto& [chain, s] : chains) {
    for (std::size_t k = 0; k < s.theta.size(); ++k)
      if (std::isnan(s.theta[k]))
        throw ParseError(source, 0, 0,
                         "chain " + std::to_string(chain) + " draw " + std::to_string(k / width) +
                             " is missing parameter " + layout.name(k % width));
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void write_acceptance_csv(const fs::path& path, const std::vector<PosteriorSample>& samples) {
  std::string out = "chain,parameter,accepted,attempted,final_scale\n";
  if (!samples.empty()) {
    const ParamLayout layout(samples.front().grid);
    for (const auto& s : samples)
      for (std::size_t i = 0; i < s.accepted.size(); ++i)
        out += std::to_string(s.chain) + "," + quoted(layout.name(i)) + "," + std::to_string(s.accepted[i]) + "," +
               std::to_string(s.attempted[i]) + "," + format_double(s.final_scales.at(i)) + "\n";
  }
  write_text(path, out);
}

void read_acceptance_csv(const fs::path& path, std::vector<PosteriorSample>& samples) {
  if (!fs::exists(path) || samples.empty()) return;
  const std::string source = path.string();
  const std::string text = read_text(path);
  const ParamLayout layout(samples.front().grid);
  for (auto& s : samples) {
    s.accepted.assign(layout.size(), 0);
    s.attempted.assign(layout.size(), 0);
    s.final_scales.assign(layout.size(), 0.0);
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (cells.size() != 5) throw ParseError(source, line_no, 1, "expected 5 cells");
    const int chain = static_cast<int>(parse_integer(cells[0].text, source, line_no, cells[0].column));
    auto i = layout.find(cells[1].text);
    if (!i) throw ParseError(source, line_no, cells[1].column, "unknown parameter");
    for (auto& s : samples) {
      if (s.chain != chain) continue;
      s.accepted[*i] = static_cast<std::uint64_t>(parse_integer(cells[2].text, source, line_no, cells[2].column));
      s.attempted[*i] = static_cast<std::uint64_t>(parse_integer(cells[3].text, source, line_no, cells[3].column));
      s.final_scales[*i] = parse_number(cells[4].text, source, line_no, cells[4].column);
    }
  }
}

}  // namespace

void write_sample_dir(const fs::path& dir, const std::vector<PosteriorSample>& samples, const RunManifest& manifest) {
  fs::create_directories(dir);
  write_samples_csv(dir / "samples.csv", samples);
  write_acceptance_csv(dir / "acceptance.csv", samples);
  write_manifest(dir / "manifest.json", manifest);
}

std::vector<PosteriorSample> read_sample_dir(const fs::path& dir, RunManifest* manifest_out) {
  RunManifest manifest = read_manifest(dir / "manifest.json");
  if (!fs::exists(dir / "samples.csv")) throw ParseError((dir / "samples.csv").string(), 0, 0, "file not found");
  auto samples = read_samples_csv(dir / "samples.csv", manifest);
  read_acceptance_csv(dir / "acceptance.csv", samples);
  if (manifest_out) *manifest_out = std::move(manifest);
  return samples;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, 0, "cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace recon::io
