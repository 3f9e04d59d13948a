#pragma once

// Shared helpers for the test binaries: an independent scalar-loop
// projection, random model inputs and small statistics oracles.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "recon/ccmpp.hpp"
#include "recon/grid.hpp"

namespace testing {

using recon::ModelGrid;
using recon::Sex;
using recon::ThetaVector;

// Plain nested vectors, written from the model equations without using
// any library code. out[t][sex][age].
struct OracleRun {
  std::vector<std::vector<std::vector<double>>> counts;
  std::vector<double> births;
};

inline OracleRun oracle_project(const ModelGrid& g, const ThetaVector& th) {
  const int K = g.A / 5 + 1;
  const int P = (g.T - g.t0) / 5;
  const int lo = g.fert_lo / 5;
  const int nf = (g.fert_hi - g.fert_lo) / 5 + 1;
  OracleRun run;
  std::vector<std::vector<double>> cur(2, std::vector<double>(K));
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < K; ++a) cur[l][a] = th.baseline[l][a];
  run.counts.push_back(cur);
  for (int t = 0; t < P; ++t) {
    // births: 5 * sum f_a (n_a + n_{a-5} s_a) / 2 over the fertile span, females only
    double b = 0.0;
    for (int j = 0; j < nf; ++j) {
      const int a = lo + j;
      const double f = th.fertility(j, t);
      const double below = a >= 1 ? cur[0][a - 1] * th.survival[0](a, t) : 0.0;
      b += 5.0 * f * (cur[0][a] + below) / 2.0;
    }
    run.births.push_back(b);
    std::vector<std::vector<double>> next(2, std::vector<double>(K, 0.0));
    for (int l = 0; l < 2; ++l) {
      const auto& s = th.survival[l];
      const auto& gm = th.migration[l];
      for (int a = 0; a + 1 < K; ++a) {
        const double migrants = cur[l][a] * gm(a, t);
        next[l][a + 1] += s(a + 1, t) * (cur[l][a] + migrants / 2.0) + migrants / 2.0;
      }
      const double open_migrants = cur[l][K - 1] * gm(K - 1, t);
      next[l][K - 1] += s(K, t) * (cur[l][K - 1] + open_migrants / 2.0) + open_migrants / 2.0;
      const double share = l == 0 ? 1.0 / (1.0 + th.srb[t]) : th.srb[t] / (1.0 + th.srb[t]);
      const double g0 = gm(0, t);
      next[l][0] = b * share * (s(0, t) * (1.0 + g0 / 2.0) + g0 / 2.0);
    }
    cur = next;
    run.counts.push_back(cur);
  }
  return run;
}

inline double rel_err(double a, double b) {
  const double d = std::fabs(a - b);
  const double m = std::max(std::fabs(a), std::fabs(b));
  return m == 0.0 ? d : d / m;
}

// Largest relative difference between a library trajectory and the oracle.
inline double max_rel_err(const recon::Trajectory& traj, const OracleRun& o) {
  double worst = 0.0;
  for (std::size_t t = 0; t < traj.states.size(); ++t)
    for (int l = 0; l < 2; ++l)
      for (std::size_t a = 0; a < o.counts[t][l].size(); ++a)
        worst = std::max(worst, rel_err(traj.states[t].counts[l][a], o.counts[t][l][a]));
  for (std::size_t t = 0; t < traj.births.size(); ++t) worst = std::max(worst, rel_err(traj.births[t], o.births[t]));
  return worst;
}

inline ModelGrid make_grid(int t0, int T, int A, int fert_lo, int fert_hi, std::vector<int> census) {
  ModelGrid g;
  g.t0 = t0;
  g.T = T;
  g.A = A;
  g.fert_lo = fert_lo;
  g.fert_hi = fert_hi;
  g.census_years = std::move(census);
  return g;
}

// K = 17, four periods.
inline ModelGrid standard_grid() { return make_grid(1960, 1980, 80, 15, 45, {1960, 1970, 1980}); }
// K = 4, three periods.
inline ModelGrid desk_grid() { return make_grid(1960, 1975, 15, 5, 15, {1960, 1965, 1970, 1975}); }

// Random valid rates with moderate migration.
inline ThetaVector random_theta(const ModelGrid& g, std::mt19937_64& rng, double mig = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ThetaVector th = ThetaVector::shaped(g);
  const std::size_t K = static_cast<std::size_t>(g.age_groups());
  const std::size_t P = static_cast<std::size_t>(g.periods());
  for (int l = 0; l < 2; ++l) {
    for (std::size_t a = 0; a < K; ++a) th.baseline[l][a] = 1000.0 + 99000.0 * u(rng);
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t a = 0; a <= K; ++a) th.survival[l](a, p) = 0.5 + 0.49 * u(rng);
      for (std::size_t a = 0; a < K; ++a) th.migration[l](a, p) = mig * (2.0 * u(rng) - 1.0);
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t a = 0; a < th.fertility.rows(); ++a) th.fertility(a, p) = 0.01 + 0.2 * u(rng);
    th.srb[p] = 1.0 + 0.1 * u(rng);
  }
  return th;
}

inline std::vector<double> iid_normal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

inline std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  double x = 0.0;
  for (auto& y : v) {
    x = rho * x + std::sqrt(1.0 - rho * rho) * z(rng);
    y = x;
  }
  return v;
}

// Kolmogorov-Smirnov statistic and asymptotic p-value against a CDF.
template <class Cdf>
std::pair<double, double> ks_test(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 200; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return {d, std::clamp(p, 0.0, 1.0)};
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("recon_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
