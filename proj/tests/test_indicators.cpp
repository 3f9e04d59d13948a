#include <doctest.h>

#include "recon/error.hpp"
#include "recon/indicators.hpp"
#include "recon/simulate.hpp"
#include "support.hpp"

using namespace recon;

namespace {

// Survivorship loop written out independently of life_expectancy().
double e0_oracle(const std::vector<double>& s) {
  double e = 0.0;
  for (std::size_t a = 0; a + 1 < s.size(); ++a) {
    double l = 1.0;
    for (std::size_t i = 0; i <= a; ++i) l *= s[i];
    e += 5.0 * l;
  }
  double last = 1.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) last *= s[i];
  const double open = s.back();
  // geometric tail: sum_{k>=1} open^k
  return e + 5.0 * last * open / (1.0 - open);
}

}  // namespace

TEST_CASE("tfr") {
  CHECK(tfr(std::vector<double>(7, 0.03)) == doctest::Approx(1.05).epsilon(1e-15));
  CHECK(tfr(std::vector<double>(7, 0.0)) == 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  std::vector<double> f(7);
  double direct = 0.0;
  for (auto& x : f) {
    x = u(rng);
    direct += x;
  }
  CHECK(tfr(f) == doctest::Approx(5.0 * direct).epsilon(1e-15));
}

TEST_CASE("tfr is linear in fertility") {
  const std::vector<double> a{0.01, 0.1, 0.15, 0.12, 0.08, 0.03, 0.01};
  const std::vector<double> b{0.02, 0.05, 0.07, 0.04, 0.02, 0.01, 0.005};
  std::vector<double> mix(7);
  for (std::size_t i = 0; i < 7; ++i) mix[i] = 2.0 * a[i] + 3.0 * b[i];
  CHECK(tfr(mix) == doctest::Approx(2.0 * tfr(a) + 3.0 * tfr(b)).epsilon(1e-14));
}

TEST_CASE("life expectancy closed forms") {
  std::vector<double> ones(18, 1.0);
  ones.back() = 0.0;
  CHECK(life_expectancy(ones) == 85.0);
  CHECK(life_expectancy(std::vector<double>(18, 0.5)) == 5.0);
  CHECK_THROWS_AS(life_expectancy(std::vector<double>(18, 1.0)), DomainError);
  std::vector<double> above(18, 0.9);
  above.back() = 1.2;
  CHECK_THROWS_AS(life_expectancy(above), DomainError);
}

TEST_CASE("life expectancy matches a survivorship oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.3, 0.999);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(18);
    for (auto& x : s) x = u(rng);
    CHECK(life_expectancy(s) == doctest::Approx(e0_oracle(s)).epsilon(1e-13));
  }
}

TEST_CASE("life expectancy is monotone in every survival entry") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.3, 0.95);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s(18);
    for (auto& x : s) x = u(rng);
    const double base = life_expectancy(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto up = s;
      up[i] = std::min(0.999, up[i] + 0.03);
      CHECK(life_expectancy(up) >= base);
    }
  }
}

TEST_CASE("u5mr") {
  CHECK(u5mr(0.95) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(u5mr(1.0) == 0.0);
  CHECK(u5mr(0.88) == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("sex ratios and differences") {
  const ModelGrid g = testing::standard_grid();
  ThetaVector th = reference_theta(g);
  th.survival[1] = th.survival[0];
  CHECK(sex_ratio_u5mr(th, 1) == 1.0);
  CHECK(sex_diff_e0(th, 2) == 0.0);

  th = reference_theta(g);
  ThetaVector swapped = th;
  std::swap(swapped.survival[0], swapped.survival[1]);
  for (int p = 0; p < g.periods(); ++p) {
    CHECK(sex_diff_e0(swapped, p) == -sex_diff_e0(th, p));
    CHECK(sex_ratio_u5mr(swapped, p) == doctest::Approx(1.0 / sex_ratio_u5mr(th, p)));
  }
  th.survival[0](0, 0) = 1.0;
  CHECK_THROWS_AS(sex_ratio_u5mr(th, 0), DomainError);
}

TEST_CASE("population ratios") {
  PopulationState st;
  st.counts = {std::vector<double>{487.805, 100, 50}, std::vector<double>{512.195, 90, 40}};
  CHECK(sru5(st) == doctest::Approx(1.05).epsilon(1e-6));
  CHECK(srtp(st) == doctest::Approx(642.195 / 637.805));

  PopulationState same;
  same.counts = {std::vector<double>{10, 20}, std::vector<double>{10, 20}};
  CHECK(srtp(same) == 1.0);
  CHECK(sru5(same) == 1.0);

  PopulationState none;
  none.counts = {std::vector<double>{0, 0}, std::vector<double>{1, 1}};
  CHECK_THROWS_AS(srtp(none), DomainError);
  CHECK_THROWS_AS(sru5(none), DomainError);
}

TEST_CASE("ratios are invariant to a common scale") {
  const ModelGrid g = testing::standard_grid();
  std::mt19937_64 rng(12);
  const ThetaVector th = testing::random_theta(g, rng);
  const Trajectory tr = project_full(th, g);
  for (const auto& st : tr.states) {
    for (double c : {0.001, 3.0, 1e6}) {
      PopulationState scaled = st;
      for (auto& v : scaled.counts)
        for (double& x : v) x *= c;
      CHECK(srtp(scaled) == doctest::Approx(srtp(st)).epsilon(1e-14));
      CHECK(sru5(scaled) == doctest::Approx(sru5(st)).epsilon(1e-14));
    }
  }
}

TEST_CASE("average annual net migrants") {
  const std::vector<double> n{200, 300, 500};
  CHECK(avg_annual_net_migrants(n, std::vector<double>(3, 0.02)) == doctest::Approx(4.0));
  CHECK(avg_annual_net_migrants(n, std::vector<double>{0.1, -0.1, 0.0}) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(avg_annual_net_migrants(n, std::vector<double>(2, 0.0)), Error);
}
