#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "recon/grid.hpp"
#include "recon/priors.hpp"
#include "recon/sampler.hpp"
#include "recon/simulate.hpp"
#include "recon/table.hpp"

namespace recon::io {

namespace fs = std::filesystem;

// ---- CSV matrices -------------------------------------------------------
//
// A header line "label,c1,c2,..." followed by rows "r,v1,v2,...". Blank
// lines and lines starting with '#' are skipped; cells are trimmed.

struct CsvMatrix {
  std::string corner;
  std::vector<std::string> col_labels;
  std::vector<std::string> row_labels;
  Table values;  // rows x cols
};

CsvMatrix parse_csv_matrix(std::string_view text, const std::string& source);
CsvMatrix read_csv_matrix(const fs::path& path);
std::string format_csv_matrix(const CsvMatrix& m);
void write_csv_matrix(const fs::path& path, const CsvMatrix& m);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// ---- key/value configuration ---------------------------------------------
//
// INI-style: "[section]" headers and "key = value" lines; '#' starts a
// comment. Sections: [grid], [elicitation], [sampler], [simulate]. See
// README for every key.

struct ConfigEntry {
  std::string value;
  int line = 0;
};

class Config {
 public:
  static Config parse(std::string_view text, const std::string& source);
  static Config read(const fs::path& path);

  const std::string& source() const { return source_; }
  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
  const std::map<std::string, ConfigEntry>* section(const std::string& name) const;

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
};

ModelGrid grid_from_config(const Config& cfg);
Elicitation elicitation_from_config(const Config& cfg);
// Starts from `base` and overrides any keys present in [sampler].
SamplerConfig sampler_from_config(const Config& cfg, SamplerConfig base = {});
SimulateOptions simulate_options_from_config(const Config& cfg);

std::string format_grid_config(const ModelGrid& grid);
std::string format_elicitation_config(const Elicitation& e);

// ---- parameter and census directories --------------------------------------
//
// baseline_F.csv, baseline_M.csv   rows: ages 0..A,     columns: t0
// fertility.csv                    rows: fertile ages,  columns: period starts
// survival_F.csv, survival_M.csv   rows: ages 0..A+5,   columns: period starts
// migration_F.csv, migration_M.csv rows: ages 0..A,     columns: period starts
// srb.csv                          one row "srb",       columns: period starts
// census_F.csv, census_M.csv       rows: ages 0..A,     columns: census years

ThetaVector read_theta_dir(const fs::path& dir, const ModelGrid& grid);
void write_theta_dir(const fs::path& dir, const ModelGrid& grid, const ThetaVector& theta);
CensusData read_census_dir(const fs::path& dir, const ModelGrid& grid);
void write_census_dir(const fs::path& dir, const ModelGrid& grid, const CensusData& census);
std::vector<fs::path> theta_files(const fs::path& dir);
std::vector<fs::path> census_files(const fs::path& dir);

// Tidy projection output: "year,sex,age,count".
std::string format_trajectory(const Trajectory& traj, const ModelGrid& grid);

// ---- run manifests and samples ----------------------------------------------

struct RunManifest {
  std::string command;
  std::string software_version;
  std::string simd_level;
  std::string started_at;  // UTC, ISO 8601
  double wall_seconds = 0.0;
  ModelGrid grid;
  std::optional<SamplerConfig> sampler;
  std::optional<Elicitation> elicitation;
  std::optional<HyperParams> hyper;
  std::vector<std::uint64_t> chain_seeds;
  bool census_likelihood = true;
  std::map<std::string, std::string> input_digests;  // file name -> sha256 hex
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const fs::path& path, const RunManifest& m);
RunManifest read_manifest(const fs::path& path);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const fs::path& path);
std::string software_version();
std::string utc_timestamp();

// samples.csv: "chain,draw,parameter,value", one row per parameter per draw,
// with parameters named as in ParamLayout plus sigma2[n], sigma2[f], ...
void write_samples_csv(const fs::path& path, const std::vector<PosteriorSample>& samples);
// Rebuilds samples on `grid`; config and seeds come from the manifest.
std::vector<PosteriorSample> read_samples_csv(const fs::path& path, const RunManifest& manifest);

// <dir>/samples.csv + <dir>/manifest.json
void write_sample_dir(const fs::path& dir, const std::vector<PosteriorSample>& samples,
                      const RunManifest& manifest);
std::vector<PosteriorSample> read_sample_dir(const fs::path& dir, RunManifest* manifest = nullptr);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);

}  // namespace recon::io
