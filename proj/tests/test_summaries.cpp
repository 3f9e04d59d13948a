#include <doctest.h>

#include "recon/error.hpp"
#include "recon/indicators.hpp"
#include "recon/report.hpp"
#include "recon/simulate.hpp"
#include "recon/stats.hpp"
#include "recon/summaries.hpp"
#include "support.hpp"

using namespace recon;

namespace {

TrajectoryMatrix toy() {
  // three draws over start years 0, 5, 10
  return TrajectoryMatrix::from_rows("x", {0, 5, 10}, {{1.0, 2.0, 3.0}, {2.0, 2.0, 2.0}, {3.0, 1.0, 4.0}});
}

PosteriorSample sample_of(const ModelGrid& g, const std::vector<ThetaVector>& draws) {
  PosteriorSample s;
  s.grid = g;
  const ParamLayout layout(g);
  s.width = layout.size();
  for (const auto& th : draws) {
    const auto packed = layout.pack(th);
    s.theta.insert(s.theta.end(), packed.begin(), packed.end());
    s.variances.emplace_back();
  }
  return s;
}

}  // namespace

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(quantile(v, 0.5) == 3.0);
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 5.0);
  CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
  CHECK(quantile({7.0}, 0.3) == 7.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<std::vector<double>> rows(101, std::vector<double>(3));
  for (auto& r : rows)
    for (double& x : r) x = u(rng);
  const auto m = TrajectoryMatrix::from_rows("r", {1, 2, 3}, rows);
  const std::vector<double> probs{0.025, 0.5, 0.975};
  const auto q = marginal_quantiles(m, probs);
  for (std::size_t p = 0; p < 3; ++p) {
    std::vector<double> col;
    for (const auto& r : rows) col.push_back(r[p]);
    std::sort(col.begin(), col.end());
    // with 101 draws these probabilities land on or between order statistics
    CHECK(q.values(p, 1) == col[50]);
    CHECK(q.values(p, 0) == doctest::Approx(col[2] + 0.5 * (col[3] - col[2])));
    CHECK(q.values(p, 2) == doctest::Approx(col[97] + 0.5 * (col[98] - col[97])));
  }
  const auto constant = TrajectoryMatrix::from_rows("c", {1, 2}, {{4.0, 4.0}, {4.0, 4.0}});
  const auto qc = marginal_quantiles(constant, probs);
  for (double v2 : qc.values.data()) CHECK(v2 == 4.0);
  CHECK(qc.row(0.5).size() == 2);
  CHECK_THROWS_AS(qc.row(0.3), Error);
  CHECK_THROWS_AS(marginal_quantiles(TrajectoryMatrix("e", {1}, 0), probs), Error);
  CHECK_THROWS_AS(TrajectoryMatrix::from_rows("bad", {1, 2}, {{1.0, 2.0}, {1.0}}), Error);
}

TEST_CASE("mean half-width") {
  CHECK(mean_half_width(std::vector<double>{0, 0, 0}, std::vector<double>{2, 2, 2}) == 1.0);
  // TFR interval [1.0, 1.22] reported as half-width 0.11
  CHECK(mean_half_width(std::vector<double>{1.0}, std::vector<double>{1.22}) == doctest::Approx(0.11).epsilon(1e-12));
  CHECK(mean_half_width(std::vector<double>{0, 1}, std::vector<double>{1, 4}) == 1.0);
  CHECK_THROWS_AS(mean_half_width(std::vector<double>{0}, std::vector<double>{1, 2}), Error);
  const std::vector<double> probs{0.1, 0.9};
  const auto q = marginal_quantiles(toy(), probs);
  double want = 0.0;
  for (std::size_t p = 0; p < 3; ++p) want += (q.values(p, 1) - q.values(p, 0)) / 2.0;
  CHECK(mean_half_width(q, 0.1, 0.9) == doctest::Approx(want / 3.0).epsilon(1e-15));
}

TEST_CASE("hand-computed toy summaries are exact") {
  const auto m = toy();
  CHECK(exceedance_prob(m, 2.0, Direction::Above) == std::vector<double>{1.0 / 3.0, 0.0, 2.0 / 3.0});
  CHECK(exceedance_prob(m, 2.0, Direction::AtLeast) == std::vector<double>{2.0 / 3.0, 2.0 / 3.0, 1.0});
  CHECK(exceedance_prob(m, 2.0, Direction::Below) == std::vector<double>{1.0 / 3.0, 1.0 / 3.0, 0.0});
  CHECK(exceedance_prob(m, 2.0, Direction::AtMost) == std::vector<double>{2.0 / 3.0, 1.0, 1.0 / 3.0});
  CHECK(endpoint_diff(m, 0, 10) == std::vector<double>{2.0, 0.0, 1.0});
  CHECK(endpoint_diff(m, 5, 10) == std::vector<double>{1.0, 0.0, 3.0});
  // slopes on years 0, 5, 10: (y2 - y0) / 10 for three equally spaced points
  CHECK(ols_slope(m) == std::vector<double>{0.2, 0.0, 0.1});
  std::vector<std::vector<bool>> preds{{true, false, true}, {true, true, false}};
  CHECK(joint_event_prob(preds) == 1.0 / 3.0);
  CHECK(joint_event_prob({{true, true, true}}) == 1.0);
  CHECK(joint_event_prob({{true, false}, {false, true}}) == 0.0);
  CHECK_THROWS_AS(joint_event_prob({{true}, {true, false}}), Error);
  CHECK_THROWS_AS(ols_slope(TrajectoryMatrix::from_rows("one", {0}, {{1.0}})), Error);
}

TEST_CASE("trend examples") {
  const auto m = TrajectoryMatrix::from_rows("t", {0, 5, 10}, {{1, 2, 3}, {7, 7, 7}});
  CHECK(ols_slope(m)[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(endpoint_diff(m, 0, 10)[0] == 2.0);
  CHECK(ols_slope(m)[1] == 0.0);
  CHECK(endpoint_diff(m, 0, 10)[1] == 0.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> rows(40, std::vector<double>(6));
  for (auto& r : rows)
    for (double& x : r) x = z(rng);
  const std::vector<int> years{1960, 1965, 1970, 1975, 1980, 1985};
  const auto rm = TrajectoryMatrix::from_rows("r", years, rows);
  const auto slopes = ols_slope(rm);
  for (std::size_t d = 0; d < rows.size(); ++d) {
    // normal equations
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t p = 0; p < 6; ++p) {
      sx += years[p];
      sy += rows[d][p];
      sxx += double(years[p]) * years[p];
      sxy += years[p] * rows[d][p];
    }
    const double want = (6 * sxy - sx * sy) / (6 * sxx - sx * sx);
    CHECK(slopes[d] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("summary properties") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z(1.06, 0.01);
  std::vector<std::vector<double>> rows(2000, std::vector<double>(4));
  for (auto& r : rows)
    for (double& x : r) x = z(rng);
  const std::vector<int> years{1990, 1995, 2000, 2005};
  const auto m = TrajectoryMatrix::from_rows("srb", years, rows);

  SUBCASE("complementary exceedance") {
    for (double c : {1.04, 1.06, 1.07}) {
      const auto above = exceedance_prob(m, c, Direction::Above);
      const auto at_most = exceedance_prob(m, c, Direction::AtMost);
      for (std::size_t p = 0; p < 4; ++p) CHECK(above[p] + at_most[p] == 1.0);
    }
    for (double p : exceedance_prob(m, 1.06, Direction::Above)) CHECK(p == doctest::Approx(0.5).epsilon(0.1));
  }
  SUBCASE("trends are unchanged by a constant shift") {
    auto shifted_rows = rows;
    for (auto& r : shifted_rows)
      for (double& x : r) x += 0.25;
    const auto s = TrajectoryMatrix::from_rows("srb", years, shifted_rows);
    const auto a = ols_slope(m), b = ols_slope(s);
    const auto da = endpoint_diff(m, 1990, 2005), db = endpoint_diff(s, 1990, 2005);
    for (std::size_t d = 0; d < a.size(); ++d) {
      CHECK(b[d] == doctest::Approx(a[d]).epsilon(1e-9));
      CHECK(db[d] == doctest::Approx(da[d]).epsilon(1e-9));
    }
  }
  SUBCASE("slopes are unchanged by relabelling the years") {
    const auto s = TrajectoryMatrix::from_rows("srb", {0, 5, 10, 15}, rows);
    const auto a = ols_slope(m), b = ols_slope(s);
    for (std::size_t d = 0; d < a.size(); ++d) CHECK(b[d] == doctest::Approx(a[d]).epsilon(1e-9));
  }
  SUBCASE("permutation of draws") {
    auto perm = rows;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto p = TrajectoryMatrix::from_rows("srb", years, perm);
    const std::vector<double> probs{0.025, 0.5, 0.975};
    CHECK(marginal_quantiles(p, probs).values == marginal_quantiles(m, probs).values);
    CHECK(exceedance_prob(p, 1.06, Direction::Above) == exceedance_prob(m, 1.06, Direction::Above));
    auto a = ols_slope(m), b = ols_slope(p);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  SUBCASE("independent coin predicates") {
    std::bernoulli_distribution coin(0.5);
    std::vector<std::vector<bool>> preds(2, std::vector<bool>(100000));
    for (auto& p : preds)
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = coin(rng);
    CHECK(joint_event_prob(preds) == doctest::Approx(0.25).epsilon(0.03));
  }
}

TEST_CASE("indicator trajectories") {
  const ModelGrid g = testing::standard_grid();
  const ThetaVector ref = reference_theta(g);
  std::mt19937_64 rng(2);
  std::vector<ThetaVector> draws{ref, testing::random_theta(g, rng), testing::random_theta(g, rng)};
  const PosteriorSample s = sample_of(g, draws);

  CHECK(indicator_names().size() == 12);
  CHECK(is_indicator("e0_F"));
  CHECK_FALSE(is_indicator("E0_F"));
  CHECK(indicator_units("tfr") == "children per woman");
  CHECK_THROWS_AS(indicator_trajectories(s, "gdp"), Error);

  const auto srb = indicator_trajectories(s, "srb");
  CHECK(srb.years() == std::vector<int>{1960, 1965, 1970, 1975});
  for (std::size_t d = 0; d < 3; ++d)
    for (std::size_t p = 0; p < 4; ++p) CHECK(srb.at(d, p) == draws[d].srb[p]);

  const auto e0 = indicator_trajectories(s, "e0_M");
  const auto diff = indicator_trajectories(s, "e0_diff");
  const auto tfrm = indicator_trajectories(s, "tfr");
  const auto u5 = indicator_trajectories(s, "sru5mr");
  const auto mig = indicator_trajectories(s, "net_migrants_F");
  for (std::size_t d = 0; d < 3; ++d)
    for (int p = 0; p < 4; ++p) {
      const auto pp = static_cast<std::size_t>(p);
      CHECK(e0.at(d, pp) == life_expectancy(draws[d].survival[1].column(pp)));
      CHECK(diff.at(d, pp) == sex_diff_e0(draws[d], p));
      CHECK(tfrm.at(d, pp) == tfr(draws[d].fertility.column(pp)));
      CHECK(u5.at(d, pp) == sex_ratio_u5mr(draws[d], p));
      const Trajectory tr = project_full(draws[d], g);
      CHECK(mig.at(d, pp) == avg_annual_net_migrants(tr.states[pp].counts[0], draws[d].migration[0].column(pp)));
    }

  const auto srtp_m = indicator_trajectories(s, "srtp");
  CHECK(srtp_m.years() == g.stock_years());
  for (std::size_t d = 0; d < 3; ++d) {
    const Trajectory tr = project_full(draws[d], g);
    for (std::size_t t = 0; t < 5; ++t) CHECK(srtp_m.at(d, t) == srtp(tr.states[t]));
  }

  SUBCASE("identical draws give a constant matrix") {
    const PosteriorSample same = sample_of(g, {ref, ref, ref});
    const auto m = indicator_trajectories(same, "sru5");
    for (std::size_t p = 0; p < m.periods(); ++p)
      for (std::size_t d = 1; d < 3; ++d) CHECK(m.at(d, p) == m.at(0, p));
  }
  SUBCASE("several samples are concatenated in order") {
    const std::vector<PosteriorSample> both{s, sample_of(g, {ref})};
    const auto m = indicator_trajectories(both, "srb");
    CHECK(m.draws() == 4);
    CHECK(m.at(3, 0) == ref.srb[0]);
  }
}

TEST_CASE("threshold, trend and event parsing") {
  const auto t = parse_threshold("SRB>1.06");
  CHECK(t.indicator == "srb");
  CHECK(t.dir == Direction::Above);
  CHECK(t.value == 1.06);
  CHECK(parse_threshold("tfr <= 2.1").dir == Direction::AtMost);
  CHECK(parse_threshold("sru5mr<1").dir == Direction::Below);
  CHECK(parse_threshold("e0_diff>=0").dir == Direction::AtLeast);
  CHECK_THROWS_AS(parse_threshold("srb=1.06"), ValidationError);
  CHECK_THROWS_AS(parse_threshold("gdp>1"), ValidationError);
  CHECK_THROWS_AS(parse_threshold("srb>abc"), ValidationError);

  const auto d = parse_trend("srb:diff:1995:2005");
  CHECK(d.kind == TrendSpec::Kind::Diff);
  CHECK(d.from == 1995);
  CHECK(d.to == 2005);
  CHECK_FALSE(parse_trend("srb:slope").from.has_value());
  CHECK(parse_trend("srb:slope:1990:2000").to == 2000);
  CHECK_THROWS_AS(parse_trend("srb:diff"), ValidationError);
  CHECK_THROWS_AS(parse_trend("srb:curve"), ValidationError);
  CHECK_THROWS_AS(parse_trend("srb"), ValidationError);

  const auto e = parse_event("srb@1995>1.06");
  CHECK(e.year == 1995);
  CHECK(e.value == 1.06);
  const auto j = parse_joint("srb:diff:1960:1980<0 & srb:diff:1985:1995>0");
  REQUIRE(j.size() == 2);
  CHECK(j[0].trend->kind == TrendSpec::Kind::Diff);
  CHECK(j[0].dir == Direction::Below);
  CHECK(j[1].trend->from == 1985);
  CHECK_THROWS_AS(parse_event("srb>1"), ValidationError);
}

TEST_CASE("summarize produces tidy rows") {
  const ModelGrid g = testing::standard_grid();
  const ThetaVector ref = reference_theta(g);
  std::vector<ThetaVector> draws;
  const double srbs[3][4] = {{1.05, 1.07, 1.08, 1.10}, {1.04, 1.05, 1.06, 1.07}, {1.06, 1.05, 1.04, 1.03}};
  for (const auto& row : srbs) {
    ThetaVector th = ref;
    th.srb.assign(row, row + 4);
    draws.push_back(th);
  }
  const std::vector<PosteriorSample> samples{sample_of(g, draws)};
  SummaryRequest req;
  req.indicators = {"SRB"};
  req.probs = {0.1, 0.5, 0.9};
  req.thresholds = {parse_threshold("srb>1.06")};
  req.trends = {parse_trend("srb:diff:1960:1975"), parse_trend("srb:slope:1965:1975")};
  req.joints = {"srb:diff:1960:1970>0 & srb@1975>1.05"};
  const auto rows = summarize(samples, req);

  auto find = [&](const std::string& ind, const std::string& period, const std::string& stat) {
    for (const auto& r : rows)
      if (r.indicator == ind && r.period == period && r.statistic == stat) return r.value;
    FAIL("missing row " << ind << " " << period << " " << stat);
    return 0.0;
  };
  CHECK(find("srb", "1960", "mean") == doctest::Approx(1.05));
  CHECK(find("srb", "1960", "q0.5") == 1.05);
  CHECK(find("srb", "1975", "P(>1.06)") == 2.0 / 3.0);
  CHECK(find("srb", "1965", "P(>1.06)") == 1.0 / 3.0);
  CHECK(find("srb", "1960-1975", "diff_mean") == doctest::Approx((0.05 + 0.03 - 0.03) / 3));
  CHECK(find("srb", "1960-1975", "diff_P(>0)") == 2.0 / 3.0);
  CHECK(find("srb", "1965-1975", "slope_P(>0)") == 2.0 / 3.0);
  CHECK(find("srb", "all", "mean_half_width_80") > 0.0);
  // draw 0: +0.03 and 1.10; draw 1: +0.02 and 1.07; draw 2: -0.02
  CHECK(find("joint", "all", "srb:diff:1960:1970>0 & srb@1975>1.05") == 2.0 / 3.0);

  const std::string csv = format_summary(rows);
  CHECK(csv.rfind("indicator,period,statistic,value\n", 0) == 0);
  CHECK(csv.find("srb,1975,P(>1.06),") != std::string::npos);

  SUBCASE("bad requests") {
    SummaryRequest bad;
    bad.indicators = {"gdp"};
    CHECK_THROWS_AS(summarize(samples, bad), ValidationError);
    SummaryRequest badp;
    badp.indicators = {"srb"};
    badp.probs = {1.5};
    CHECK_THROWS_AS(summarize(samples, badp), ValidationError);
  }
}
