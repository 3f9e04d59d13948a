// recon: command-line front end for projection, sampling, summaries,
// run-length diagnostics and synthetic data.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

#include "recon/ccmpp.hpp"
#include "recon/diagnostics.hpp"
#include "recon/error.hpp"
#include "recon/io.hpp"
#include "recon/report.hpp"
#include "recon/simd.hpp"
#include "recon/simulate.hpp"

namespace fs = std::filesystem;
using namespace recon;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInvalid = 2, kSampling = 3 };

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    io::write_text(out_path, text);
}

io::RunManifest base_manifest(const std::string& command, const ModelGrid& grid) {
  io::RunManifest m;
  m.command = command;
  m.software_version = io::software_version();
  m.simd_level = std::string(simd::level_name(simd::active_level()));
  m.started_at = io::utc_timestamp();
  m.grid = grid;
  return m;
}

void digest_into(io::RunManifest& m, const fs::path& file, const std::string& key) {
  if (fs::exists(file)) m.input_digests[key] = io::file_sha256(file);
}

// ---- project --------------------------------------------------------------

struct ProjectArgs {
  std::string grid, theta_dir, out;
};

int run_project(const ProjectArgs& a) {
  const ModelGrid grid = io::grid_from_config(io::Config::read(a.grid));
  const ThetaVector theta = io::read_theta_dir(a.theta_dir, grid);
  const auto report = validate_theta(grid, theta, FertilityBound::NonNegative);
  if (!report.ok()) throw ValidationError(report.to_string());
  const Trajectory traj = project_full(theta, grid);
  emit(a.out, io::format_trajectory(traj, grid));
  if (traj.first_negative) {
    const auto& n = *traj.first_negative;
    std::cerr << "warning: projection has a negative count " << n.value << " (age " << n.age << ", year "
              << n.year << ", sex " << sex_code(n.sex) << ")\n";
  }
  return kOk;
}

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string grid, initial, census, elicitation, sampler, out_dir;
  std::optional<int> iterations, burn_in, thin, chains;
  std::optional<std::uint64_t> seed;
  bool prior_only = false;
};

int run_sample(const SampleArgs& a) {
  const auto t_start = std::chrono::steady_clock::now();
  const io::Config grid_cfg = io::Config::read(a.grid);
  const ModelGrid grid = io::grid_from_config(grid_cfg);
  const io::Config elic_cfg = a.elicitation.empty() ? grid_cfg : io::Config::read(a.elicitation);
  const Elicitation elicitation = io::elicitation_from_config(elic_cfg);

  SamplerConfig config = io::sampler_from_config(grid_cfg);
  if (!a.sampler.empty()) config = io::sampler_from_config(io::Config::read(a.sampler), config);
  if (a.iterations) config.iterations = *a.iterations;
  if (a.burn_in) config.burn_in = *a.burn_in;
  if (a.thin) config.thin = *a.thin;
  if (a.chains) config.chains = *a.chains;
  if (a.seed) config.seed = *a.seed;
  try {
    check_config(config);
  } catch (const SamplingError& e) {
    throw ValidationError(std::string("invalid sampler settings: ") + e.what());
  }

  const InitialEstimates initial = io::read_theta_dir(a.initial, grid);
  const CensusData census = io::read_census_dir(a.census, grid);
  const HyperParams hyper = beta_from_elicitation(elicitation, initial);
  Model model(grid, initial, census, hyper);
  model.set_census_likelihood(!a.prior_only);

  const auto samples = run_chains(config, model);

  io::RunManifest m = base_manifest("sample", grid);
  m.sampler = config;
  m.elicitation = elicitation;
  m.hyper = hyper;
  m.census_likelihood = !a.prior_only;
  for (const auto& s : samples) m.chain_seeds.push_back(s.chain_seed);
  digest_into(m, a.grid, "grid");
  if (!a.elicitation.empty()) digest_into(m, a.elicitation, "elicitation");
  if (!a.sampler.empty()) digest_into(m, a.sampler, "sampler");
  for (const auto& f : io::theta_files(a.initial)) digest_into(m, f, "initial/" + f.filename().string());
  for (const auto& f : io::census_files(a.census)) digest_into(m, f, "census/" + f.filename().string());
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  const fs::path out(a.out_dir);
  io::write_sample_dir(out, samples, m);
  const std::string digest = io::file_sha256(out / "samples.csv");

  std::size_t draws = 0;
  double acc = 0.0;
  std::size_t n_acc = 0;
  for (const auto& s : samples) {
    draws += s.size();
    for (std::size_t i = 0; i < s.accepted.size(); ++i)
      if (s.attempted[i] > 0) {
        acc += s.acceptance_rate(i);
        ++n_acc;
      }
  }
  std::cout << "chains: " << samples.size() << "\n"
            << "draws: " << draws << "\n"
            << "parameters: " << model.layout().size() << "\n"
            << "mean acceptance: " << (n_acc ? acc / static_cast<double>(n_acc) : 0.0) << "\n"
            << "simd: " << m.simd_level << "\n"
            << "samples sha256: " << digest << "\n";
  return kOk;
}

// ---- summarize ------------------------------------------------------------

struct SummarizeArgs {
  std::string sample_dir, out;
  std::vector<std::string> indicators, thresholds, trends, joints;
  std::vector<double> probs;
};

int run_summarize(const SummarizeArgs& a) {
  const auto samples = io::read_sample_dir(a.sample_dir);
  SummaryRequest req;
  req.indicators = a.indicators;
  if (!a.probs.empty()) req.probs = a.probs;
  for (const auto& t : a.thresholds) req.thresholds.push_back(parse_threshold(t));
  for (const auto& t : a.trends) req.trends.push_back(parse_trend(t));
  for (const auto& j : a.joints) {
    parse_joint(j);
    req.joints.push_back(j);
  }
  if (req.indicators.empty() && req.thresholds.empty() && req.trends.empty() && req.joints.empty())
    throw ValidationError("nothing to summarize: give --indicator, --threshold, --trend or --joint");
  emit(a.out, format_summary(summarize(samples, req)));
  return kOk;
}

// ---- diagnose -------------------------------------------------------------

struct DiagnoseArgs {
  std::string sample_dir, out;
  std::vector<std::string> parameters;
  double q = 0.025, r = 0.005, s = 0.95;
};

int run_diagnose(const DiagnoseArgs& a) {
  io::RunManifest manifest;
  const auto samples = io::read_sample_dir(a.sample_dir, &manifest);
  if (samples.empty()) throw ValidationError("sample directory has no draws");
  const ParamLayout layout(manifest.grid);

  // Each series is a parameter trace or a variance trace, one per chain.
  struct Series {
    std::string name;
    std::vector<std::vector<double>> chains;
  };
  std::vector<Series> series;
  auto add_parameter = [&](std::size_t i) {
    Series s{layout.name(i), {}};
    for (const auto& smp : samples) s.chains.push_back(smp.trace(i));
    series.push_back(std::move(s));
  };
  auto add_variance = [&](ParamClass c) {
    Series s{"sigma2[" + std::string(class_name(c)) + "]", {}};
    for (const auto& smp : samples) {
      std::vector<double> v;
      for (const auto& var : smp.variances) v.push_back(var[c]);
      s.chains.push_back(std::move(v));
    }
    series.push_back(std::move(s));
  };
  if (a.parameters.empty()) {
    for (std::size_t i = 0; i < layout.size(); ++i) add_parameter(i);
    for (ParamClass c : kClasses) add_variance(c);
  } else {
    for (const auto& name : a.parameters) {
      if (name.starts_with("sigma2[") && name.ends_with("]")) {
        auto cls = parse_class(std::string_view(name).substr(7, name.size() - 8));
        if (!cls) throw ValidationError("unknown variance '" + name + "'");
        add_variance(*cls);
      } else {
        auto i = layout.find(name);
        if (!i) throw ValidationError("unknown parameter '" + name + "'");
        add_parameter(*i);
      }
    }
  }

  const long nmin = raftery_lewis_nmin(a.q, a.r, a.s);
  std::ostringstream os;
  os << "# Raftery-Lewis q=" << a.q << " r=" << a.r << " s=" << a.s << " nmin=" << nmin << "\n";
  os << "parameter,chain,thin,burn_in,total,nmin,dependence,psrf\n";
  for (const auto& s : series) {
    std::string psrf = "NA";
    if (s.chains.size() >= 2) psrf = io::format_double(gelman_rubin(s.chains));
    for (std::size_t c = 0; c < s.chains.size(); ++c) {
      os << s.name << "," << samples[c].chain << ",";
      try {
        const RunLength rl = raftery_lewis(s.chains[c], a.q, a.r, a.s);
        os << rl.thin << "," << rl.burn_in << "," << rl.total << "," << rl.nmin << ","
           << io::format_double(rl.dependence);
      } catch (const DomainError&) {
        throw;
      } catch (const Error&) {
        os << "NA,NA,NA," << nmin << ",NA";
      }
      os << "," << psrf << "\n";
    }
  }
  emit(a.out, os.str());
  return kOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string grid, elicitation, theta_dir, out_dir;
  std::uint64_t seed = 1;
};

int run_simulate(const SimulateArgs& a) {
  const io::Config grid_cfg = io::Config::read(a.grid);
  const ModelGrid grid = io::grid_from_config(grid_cfg);
  const io::Config elic_cfg = a.elicitation.empty() ? grid_cfg : io::Config::read(a.elicitation);
  const Elicitation elicitation = io::elicitation_from_config(elic_cfg);
  const SimulateOptions options = io::simulate_options_from_config(grid_cfg);
  const ThetaVector centre = a.theta_dir.empty() ? reference_theta(grid) : io::read_theta_dir(a.theta_dir, grid);

  const Simulation sim = simulate(grid, centre, elicitation, a.seed, options);
  const fs::path out(a.out_dir);
  io::write_theta_dir(out / "initial", grid, sim.initial);
  io::write_theta_dir(out / "truth", grid, sim.truth);
  io::write_census_dir(out / "census", grid, sim.census);
  io::write_text(out / "grid.ini", io::format_grid_config(grid) + "\n" + io::format_elicitation_config(elicitation));

  io::RunManifest m = base_manifest("simulate", grid);
  m.elicitation = elicitation;
  m.hyper = sim.hyper;
  m.chain_seeds = {a.seed};
  digest_into(m, a.grid, "grid");
  if (!a.elicitation.empty()) digest_into(m, a.elicitation, "elicitation");
  if (!a.theta_dir.empty())
    for (const auto& f : io::theta_files(a.theta_dir)) digest_into(m, f, "centre/" + f.filename().string());
  nlohmann::json truth_var = nlohmann::json::object();
  for (ParamClass c : kClasses) truth_var[std::string(class_name(c))] = sim.variances[c];
  m.extra["true_variances"] = truth_var;
  io::write_manifest(out / "manifest.json", m);
  std::cout << "wrote " << (out / "initial").string() << ", " << (out / "census").string() << ", "
            << (out / "truth").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian reconstruction of two-sex populations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::software_version());
  std::string simd_level;
  app.add_option("--simd", simd_level, "Kernel level: scalar or avx2 (default: best available)");

  ProjectArgs pa;
  auto* project = app.add_subcommand("project", "Project a parameter set and print the trajectory");
  project->add_option("--grid", pa.grid, "Grid configuration file")->required();
  project->add_option("--theta-dir", pa.theta_dir, "Directory of parameter CSV files")->required();
  project->add_option("--out", pa.out, "Output file (default stdout)");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw from the posterior");
  sample->add_option("--grid", sa.grid, "Grid configuration file ([sampler] keys are read too)")->required();
  sample->add_option("--initial-estimates-dir", sa.initial, "Directory of initial estimates")->required();
  sample->add_option("--census", sa.census, "Directory with census_F.csv and census_M.csv")->required();
  sample->add_option("--elicitation", sa.elicitation, "File with an [elicitation] section (default: --grid)");
  sample->add_option("--sampler-config", sa.sampler, "File with a [sampler] section");
  sample->add_option("--iterations", sa.iterations, "Sweeps including burn-in");
  sample->add_option("--burn-in", sa.burn_in, "Burn-in sweeps");
  sample->add_option("--thin", sa.thin, "Keep every k-th sweep after burn-in");
  sample->add_option("--chains", sa.chains, "Number of chains");
  sample->add_option("--seed", sa.seed, "Base RNG seed");
  sample->add_flag("--prior-only", sa.prior_only, "Ignore the census likelihood");
  sample->add_option("--out-dir", sa.out_dir, "Output directory")->required();

  SummarizeArgs ua;
  auto* summ = app.add_subcommand("summarize", "Tidy posterior summaries of indicators");
  summ->add_option("--sample-dir", ua.sample_dir, "Directory written by 'sample'")->required();
  summ->add_option("--indicator", ua.indicators, "Indicator to summarize (repeatable)");
  summ->add_option("--threshold", ua.thresholds, "Exceedance, e.g. 'srb>1.06' (repeatable)");
  summ->add_option("--trend", ua.trends, "Trend, e.g. 'srb:diff:1995:2005' or 'srb:slope' (repeatable)");
  summ->add_option("--joint", ua.joints, "Joint event, e.g. 'srb:slope:1990:2000>0 & srb:slope:2000:2010<0'");
  summ->add_option("--probs", ua.probs, "Quantile probabilities")->delimiter(',');
  summ->add_option("--out", ua.out, "Output file (default stdout)");

  DiagnoseArgs da;
  auto* diag = app.add_subcommand("diagnose", "Raftery-Lewis run lengths and Gelman-Rubin PSRF");
  diag->add_option("--sample-dir", da.sample_dir, "Directory written by 'sample'")->required();
  diag->add_option("--parameter", da.parameters, "Parameter name (repeatable; default all)");
  diag->add_option("--q", da.q, "Quantile of interest")->capture_default_str();
  diag->add_option("--r", da.r, "Accuracy")->capture_default_str();
  diag->add_option("--s", da.s, "Probability of attaining the accuracy")->capture_default_str();
  diag->add_option("--out", da.out, "Output file (default stdout)");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Synthetic initial estimates and census with known truth");
  sim->add_option("--grid", ma.grid, "Grid configuration file")->required();
  sim->add_option("--elicitation", ma.elicitation, "File with an [elicitation] section (default: --grid)");
  sim->add_option("--theta-dir", ma.theta_dir, "Centre parameters (default: built-in reference schedule)");
  sim->add_option("--seed", ma.seed, "RNG seed")->capture_default_str();
  sim->add_option("--out-dir", ma.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (!simd_level.empty()) {
      auto level = simd::parse_level(simd_level);
      if (!level) throw ValidationError("unknown SIMD level '" + simd_level + "'");
      if (!simd::set_level(*level)) throw ValidationError("SIMD level '" + simd_level + "' is not available");
    }
    if (*project) return run_project(pa);
    if (*sample) return run_sample(sa);
    if (*summ) return run_summarize(ua);
    if (*diag) return run_diagnose(da);
    if (*sim) return run_simulate(ma);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const SamplingError& e) {
    std::cerr << "sampling failed: " << e.what() << "\n";
    return kSampling;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
