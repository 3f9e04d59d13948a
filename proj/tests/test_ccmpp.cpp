#include <doctest.h>

#include <cstring>

#include "recon/ccmpp.hpp"
#include "recon/error.hpp"
#include "recon/simulate.hpp"
#include "support.hpp"

using namespace recon;
using testing::make_grid;
using testing::random_theta;
using testing::standard_grid;

namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const Trajectory& a, const Trajectory& b) {
  if (a.states.size() != b.states.size() || a.births.size() != b.births.size()) return false;
  for (std::size_t t = 0; t < a.states.size(); ++t)
    for (int l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < a.states[t].counts[l].size(); ++i)
        if (!bit_equal(a.states[t].counts[l][i], b.states[t].counts[l][i])) return false;
  for (std::size_t t = 0; t < a.births.size(); ++t)
    if (!bit_equal(a.births[t], b.births[t])) return false;
  return true;
}

PeriodRates rates_from(const std::vector<double>& f, const std::vector<double>& s, const std::vector<double>& g,
                       double srb, int lo) {
  PeriodRates r;
  r.fertility = f;
  r.survival = {std::span<const double>(s), std::span<const double>(s)};
  r.migration = {std::span<const double>(g), std::span<const double>(g)};
  r.srb = srb;
  r.fert_lo_index = lo;
  return r;
}

}  // namespace

TEST_CASE("build_leslie") {
  SUBCASE("K = 3 transcription") {
    const std::vector<double> s{0.95, 0.9, 0.8, 0.5};
    const Table L = build_leslie(s);
    REQUIRE(L.rows() == 2);
    REQUIRE(L.cols() == 3);
    CHECK(L(0, 0) == 0.9);
    CHECK(L(0, 1) == 0.0);
    CHECK(L(0, 2) == 0.0);
    CHECK(L(1, 0) == 0.0);
    CHECK(L(1, 1) == 0.8);
    CHECK(L(1, 2) == 0.5);
  }
  SUBCASE("all ones") {
    const Table L = build_leslie(std::vector<double>(5, 1.0));
    for (std::size_t r = 0; r < L.rows(); ++r)
      for (std::size_t c = 0; c < L.cols(); ++c)
        CHECK(L(r, c) == ((c == r || (r == L.rows() - 1 && c == L.cols() - 1)) ? 1.0 : 0.0));
  }
  SUBCASE("K = 17 has one entry per row plus the open group") {
    std::mt19937_64 rng(3);
    const ThetaVector th = random_theta(standard_grid(), rng);
    const Table L = build_leslie(th.survival[0].column(0));
    CHECK(L.rows() == 16);
    CHECK(L.cols() == 17);
    int nonzero = 0;
    for (double v : L.data()) nonzero += v != 0.0;
    // 16 diagonal entries and the extra open-group survival in the last row
    CHECK(nonzero == 17);
  }
  SUBCASE("too short") { CHECK_THROWS_AS(build_leslie(std::vector<double>{0.9, 0.9}), Error); }
}

TEST_CASE("total_births") {
  SUBCASE("single fertile group by hand") {
    const std::vector<double> n{100.0, 100.0, 7.0};
    const std::vector<double> s{0.3, 1.0, 0.3, 0.3};
    const std::vector<double> f{0.1};
    CHECK(total_births(n, s, f, 1) == doctest::Approx(50.0).epsilon(1e-15));
  }
  SUBCASE("zero fertility") {
    const std::vector<double> n(17, 1000.0), s(18, 0.9), f(7, 0.0);
    CHECK(total_births(n, s, f, 3) == 0.0);
  }
  SUBCASE("three groups against a direct sum") {
    const std::vector<double> n{900, 800, 700, 600, 500, 400};
    const std::vector<double> s{0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.5};
    const std::vector<double> f{0.05, 0.12, 0.07};
    // Entering cohorts come from the group below each fertile group.
    const double direct = 2.5 * (0.05 * (700 + 800 * 0.92) + 0.12 * (600 + 700 * 0.93) + 0.07 * (500 + 600 * 0.94));
    CHECK(total_births(n, s, f, 2) == doctest::Approx(direct).epsilon(1e-14));
  }
  SUBCASE("fertile span starting at age 0 drops the entering term") {
    const std::vector<double> n{100, 200, 300};
    const std::vector<double> s{0.9, 0.8, 0.7, 0.5};
    const std::vector<double> f{0.1, 0.2};
    CHECK(total_births(n, s, f, 0) == doctest::Approx(2.5 * (0.1 * 100 + 0.2 * (200 + 100 * 0.8))));
  }
  SUBCASE("span past the schedule") {
    const std::vector<double> n(4, 1.0), s(5, 0.9), f(3, 0.1);
    CHECK_THROWS_AS(total_births(n, s, f, 2), Error);
  }
}

TEST_CASE("project_step examples") {
  SUBCASE("pure ageing with an accumulating open group") {
    PopulationState st;
    st.year = 2000;
    st.counts = {std::vector<double>{10, 20, 30}, std::vector<double>{10, 20, 30}};
    const std::vector<double> f{0.0}, s(4, 1.0), g(3, 0.0);
    const auto r = project_step(st, rates_from(f, s, g, 1.05, 1));
    CHECK(r.state.year == 2005);
    for (Sex l : kSexes) CHECK(r.state.counts[idx(l)] == std::vector<double>{0, 10, 50});
    CHECK_FALSE(r.negative.has_value());
  }
  SUBCASE("birth split by SRB") {
    // One fertile group whose exposure gives exactly 1000 births.
    PopulationState st;
    st.counts = {std::vector<double>{0, 2000, 0}, std::vector<double>{0, 0, 0}};
    const std::vector<double> f{0.2}, s(4, 1.0), g(3, 0.0);
    const auto r = project_step(st, rates_from(f, s, g, 1.05, 1));
    CHECK(r.births == doctest::Approx(1000.0));
    CHECK(r.state.counts[0][0] == doctest::Approx(487.805).epsilon(1e-6));
    CHECK(r.state.counts[1][0] == doctest::Approx(512.195).epsilon(1e-6));
    CHECK(r.state.counts[0][0] == doctest::Approx(1000.0 / 2.05).epsilon(1e-15));
  }
  SUBCASE("negative output is flagged, not thrown") {
    PopulationState st;
    st.counts = {std::vector<double>{10, 20, 30}, std::vector<double>{10, 20, 30}};
    const std::vector<double> f{0.1}, s(4, 0.9);
    const std::vector<double> g{0.0, -3.0, 0.0};
    const auto r = project_step(st, rates_from(f, s, g, 1.05, 1));
    REQUIRE(r.negative.has_value());
    CHECK(r.negative->sex == Sex::Female);
    CHECK(r.negative->age == 10);
    CHECK(r.negative->value < 0.0);
  }
}

TEST_CASE("projection matches the scalar-loop oracle") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    std::mt19937_64 rng(seed);
    const ModelGrid g = standard_grid();
    const ThetaVector th = random_theta(g, rng, 0.2);
    const Trajectory traj = project_full(th, g);
    CHECK(testing::max_rel_err(traj, testing::oracle_project(g, th)) < 1e-12);
  }
  SUBCASE("fertile span from age 0") {
    const ModelGrid g = make_grid(2000, 2020, 20, 0, 10, {2000, 2020});
    std::mt19937_64 rng(99);
    const ThetaVector th = random_theta(g, rng);
    CHECK(testing::max_rel_err(project_full(th, g), testing::oracle_project(g, th)) < 1e-12);
  }
}

TEST_CASE("project_full composes project_step") {
  const ModelGrid g = standard_grid();
  std::mt19937_64 rng(5);
  const ThetaVector th = random_theta(g, rng);
  const Trajectory traj = project_full(th, g);
  REQUIRE(traj.states.size() == 5);
  REQUIRE(traj.births.size() == 4);
  PopulationState st = baseline_state(th, g);
  CHECK(traj.states[0] == st);
  for (int p = 0; p < g.periods(); ++p) {
    const auto r = project_step(st, period_rates(th, g, p));
    CHECK(r.state == traj.states[static_cast<std::size_t>(p) + 1]);
    CHECK(r.births == traj.births[static_cast<std::size_t>(p)]);
    st = r.state;
  }

  SUBCASE("unit survival and no migration shifts by two groups") {
    ThetaVector t = th;
    for (int l = 0; l < 2; ++l) {
      for (double& s : t.survival[l].data()) s = 1.0;
      for (double& m : t.migration[l].data()) m = 0.0;
    }
    const Trajectory tr = project_full(t, g);
    for (int l = 0; l < 2; ++l)
      for (int a = 2; a < 16; ++a) CHECK(tr.states[2].counts[l][a] == t.baseline[l][a - 2]);
  }
}

TEST_CASE("reprojection from a period is bit-identical") {
  const ModelGrid g = standard_grid();
  std::mt19937_64 rng(11);
  ThetaVector th = random_theta(g, rng);
  Trajectory traj = project_full(th, g);
  std::uniform_real_distribution<double> u(0.5, 0.99);
  for (int p = 0; p < g.periods(); ++p) {
    th.survival[1](5, static_cast<std::size_t>(p)) = u(rng);
    th.fertility(2, static_cast<std::size_t>(p)) *= 1.1;
    reproject_from(traj, th, g, p);
    CHECK(same_bits(traj, project_full(th, g)));
  }
}

TEST_CASE("negativity flag and positivity indicator") {
  const ModelGrid g = standard_grid();
  const ThetaVector ref = reference_theta(g);
  const Trajectory ok = project_full(ref, g);
  CHECK(positivity_indicator(ok) == 1);
  CHECK_FALSE(ok.first_negative.has_value());

  Trajectory bad = ok;
  bad.states[3].counts[1][4] = -1e-9;
  CHECK(positivity_indicator(bad) == 0);

  ThetaVector th = ref;
  th.migration[1](6, 1) = -3.0;
  const Trajectory tr = project_full(th, g);
  CHECK(positivity_indicator(tr) == 0);
  REQUIRE(tr.first_negative.has_value());
  CHECK(tr.first_negative->sex == Sex::Male);
  CHECK(tr.first_negative->age == 35);
  CHECK(tr.first_negative->year == 1970);
}

TEST_CASE("no-migration cohort identities hold exactly") {
  const ModelGrid g = standard_grid();
  const std::size_t K = 17;
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    ThetaVector th = random_theta(g, rng, 0.0);
    const Trajectory tr = project_full(th, g);
    for (std::size_t p = 0; p < 4; ++p) {
      const auto& n = tr.states[p].counts;
      const auto& next = tr.states[p + 1].counts;
      for (int l = 0; l < 2; ++l) {
        const auto& s = th.survival[l];
        for (std::size_t a = 0; a + 2 < K; ++a) CHECK(bit_equal(next[l][a + 1], n[l][a] * s(a + 1, p)));
        CHECK(bit_equal(next[l][K - 1], n[l][K - 2] * s(K - 1, p) + n[l][K - 1] * s(K, p)));
      }
      const double b = tr.births[p];
      const double srb = th.srb[p];
      const double split = b * (th.survival[0](0, p) + srb * th.survival[1](0, p)) / (1.0 + srb);
      CHECK(next[0][0] + next[1][0] == doctest::Approx(split).epsilon(1e-14));
    }
  }
}

TEST_CASE("projection is homogeneous of degree one in the baseline") {
  const ModelGrid g = standard_grid();
  std::mt19937_64 rng(21);
  const ThetaVector th = random_theta(g, rng);
  for (double c : {0.5, 2.0, 4.0, 1024.0}) {
    ThetaVector scaled = th;
    for (auto& b : scaled.baseline)
      for (double& x : b) x *= c;
    const Trajectory a = project_full(th, g), b = project_full(scaled, g);
    for (std::size_t t = 0; t < a.states.size(); ++t)
      for (int l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < 17; ++i)
          CHECK(b.states[t].counts[l][i] == doctest::Approx(c * a.states[t].counts[l][i]).epsilon(1e-13));
    for (std::size_t t = 0; t < a.births.size(); ++t)
      CHECK(b.births[t] == doctest::Approx(c * a.births[t]).epsilon(1e-13));
  }
}

TEST_CASE("male counts never enter births") {
  const ModelGrid g = standard_grid();
  std::mt19937_64 rng(33);
  const ThetaVector th = random_theta(g, rng);
  const PopulationState st = baseline_state(th, g);
  const auto rates = period_rates(th, g, 0);
  const double b = total_births(st, rates.survival[0], rates.fertility, rates.fert_lo_index);
  for (std::size_t a = 0; a < 17; ++a) {
    PopulationState p = st;
    p.counts[1][a] *= 3.7;
    CHECK(bit_equal(project_step(p, rates).births, b));
  }
}
