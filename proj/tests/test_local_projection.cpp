#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "lproj/local_projection.hpp"
#include "lproj/rng.hpp"

using namespace lproj;

namespace {

// Simulated two-regime economy: z_t responds to the shock with regime-specific
// impact, plus an autoregressive control that enters the information set.
struct SimData {
  Dataset ds;
  StateSeries state;
};

SimData simulate_two_regime(long T, double beta_high, double beta_low, std::uint64_t seed,
                            double noise_sd = 1.0) {
  Rng rng(seed);
  Eigen::VectorXd shock(T), z(T), ctrl(T), driver(T);
  double d = 0.0, c = 0.0;
  for (long t = 0; t < T; ++t) {
    d = 0.9 * d + rng.normal();
    driver[t] = d;
    shock[t] = rng.normal();
    c = 0.5 * c + rng.normal();
    ctrl[t] = c;
    double w = t > 0 ? (driver[t - 1] > 0.0 ? 1.0 : 0.0) : 0.0;
    z[t] = w * beta_high * shock[t] + (1.0 - w) * beta_low * shock[t] + noise_sd * rng.normal();
  }
  Dataset ds(Quarter(1900, 1), T);
  ds.add("z", z);
  ds.add("shock", shock);
  ds.add("ctrl", ctrl);
  SimData out{std::move(ds),
              build_state(Series(Quarter(1900, 1), driver), StateMode::dummy, 10.0, 1)};
  return out;
}

LpSpec basic_spec(const std::string& dep, const std::string& shock) {
  LpSpec spec;
  spec.dependent = dep;
  spec.shock = shock;
  spec.controls = {"ctrl"};
  spec.control_lags = 1;
  spec.horizon_max = 4;
  return spec;
}

}  // namespace

TEST_CASE("build_design: linear layout is [const, shock, lagged control]") {
  long T = 30;
  Eigen::VectorXd z(T), shock(T), ctrl(T);
  for (long t = 0; t < T; ++t) {
    z[t] = t;
    shock[t] = 100 + t;
    ctrl[t] = 200 + t;
  }
  Dataset ds(Quarter(1950, 1), T);
  ds.add("z", z);
  ds.add("shock", shock);
  ds.add("ctrl", ctrl);
  LpSpec spec = basic_spec("z", "shock");
  Design d = build_design(ds, spec, 0);
  REQUIRE(d.col_labels.size() == 3);
  CHECK(d.col_labels[0] == "linear:const");
  CHECK(d.col_labels[1] == "linear:shock");
  CHECK(d.col_labels[2] == "linear:ctrl.l1");
  // First usable row is t=1 (one control lag).
  CHECK(d.row_quarters.front() == Quarter(1950, 2));
  CHECK(d.X(0, 0) == 1.0);
  CHECK(d.X(0, 1) == doctest::Approx(101.0));
  CHECK(d.X(0, 2) == doctest::Approx(200.0));
  CHECK(d.y[0] == doctest::Approx(1.0));

  Design d2 = build_design(ds, spec, 2);
  CHECK(d2.y[0] == doctest::Approx(3.0));  // z_{t+2} with t=1
  CHECK(d2.y.size() == T - 3);             // one lag, two leads
}

TEST_CASE("build_design: constant state weight drops the empty block") {
  long T = 40;
  Rng rng(3);
  Eigen::VectorXd z = rng.normal_vector(T), shock = rng.normal_vector(T),
                  ctrl = rng.normal_vector(T);
  Dataset ds(Quarter(1950, 1), T);
  ds.add("z", z);
  ds.add("shock", shock);
  ds.add("ctrl", ctrl);
  LpSpec spec = basic_spec("z", "shock");
  spec.state = StateSeries{Series(Quarter(1950, 1), Eigen::VectorXd::Ones(T)), StateMode::dummy};
  Design d = build_design(ds, spec, 0);
  REQUIRE(d.block_labels.size() == 1);
  CHECK(d.block_labels[0] == "high");
  REQUIRE(!d.warnings.empty());
  CHECK(d.warnings[0].find("low") != std::string::npos);

  // The surviving block is numerically the linear design.
  LpSpec linear = basic_spec("z", "shock");
  Design dl = build_design(ds, linear, 0);
  CHECK((d.X - dl.X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_design: dummy states put each row in exactly one block") {
  SimData sim = simulate_two_regime(120, 1.0, 0.0, 77);
  LpSpec spec = basic_spec("z", "shock");
  spec.state = sim.state;
  Design d = build_design(sim.ds, spec, 0);
  REQUIRE(d.block_labels.size() == 2);
  long cpb = d.cols_per_block;
  for (long r = 0; r < d.X.rows(); ++r) {
    double a = d.X.row(r).segment(0, cpb).cwiseAbs().sum();
    double b = d.X.row(r).segment(cpb, cpb).cwiseAbs().sum();
    CHECK(((a > 0.0) != (b > 0.0)));
  }
}

TEST_CASE("build_design: insufficient sample raises naming the horizon") {
  long T = 12;
  Rng rng(5);
  Dataset ds(Quarter(1950, 1), T);
  ds.add("z", rng.normal_vector(T));
  ds.add("shock", rng.normal_vector(T));
  ds.add("ctrl", rng.normal_vector(T));
  LpSpec spec = basic_spec("z", "shock");
  CHECK_THROWS_WITH_AS(build_design(ds, spec, 4), doctest::Contains("h=4"),
                       estimation_error);
}

TEST_CASE("estimate_lp recovers a static impact and zero dynamics") {
  long T = 2000;
  Rng rng(101);
  Eigen::VectorXd shock = rng.normal_vector(T), ctrl = rng.normal_vector(T), z(T);
  for (long t = 0; t < T; ++t) z[t] = 0.5 * shock[t] + 0.3 * rng.normal();
  Dataset ds(Quarter(1600, 1), T);
  ds.add("z", z);
  ds.add("shock", shock);
  ds.add("ctrl", ctrl);
  LpSpec spec = basic_spec("z", "shock");
  IrfResult r = estimate_lp(ds, spec);
  REQUIRE(r.states.size() == 1);
  const auto& pts = r.states[0].points;
  CHECK(std::abs(pts[0].estimate - 0.5) < 3.0 * pts[0].se);
  CHECK(pts[0].se < 0.05);
  for (int h = 1; h <= 4; ++h) CHECK(std::abs(pts[h].estimate) < 3.5 * pts[h].se);
}

TEST_CASE("estimate_lp separates regimes with a dummy state") {
  SimData sim = simulate_two_regime(2000, 1.0, 0.0, 103, 0.5);
  LpSpec spec = basic_spec("z", "shock");
  spec.state = sim.state;
  IrfResult r = estimate_lp(sim.ds, spec, 2);
  REQUIRE(r.states.size() == 2);
  const StateIrf* high = nullptr;
  const StateIrf* low = nullptr;
  for (const auto& s : r.states) {
    if (s.label == "high") high = &s;
    if (s.label == "low") low = &s;
  }
  REQUIRE(high);
  REQUIRE(low);
  CHECK(std::abs(high->points[0].estimate - 1.0) < 3.0 * high->points[0].se);
  CHECK(std::abs(low->points[0].estimate) < 3.0 * low->points[0].se);
  REQUIRE(r.diffs.size() == 1);
  CHECK(r.diffs[0].label == "high-low");
  CHECK(r.diffs[0].rows[0].estimate ==
        doctest::Approx(high->points[0].estimate - low->points[0].estimate));
  CHECK(r.diffs[0].rows[0].pvalue < 0.01);
  CHECK(r.diffs[0].rows[0].stars == "***");
}

TEST_CASE("difference test p-values are invariant to swapping state labels") {
  SimData sim = simulate_two_regime(600, 0.8, 0.2, 107, 0.7);
  LpSpec spec = basic_spec("z", "shock");
  spec.state = sim.state;
  IrfResult a = estimate_lp(sim.ds, spec);

  StateSeries flipped = sim.state;
  flipped.series = Series(sim.state.series.start(),
                          (1.0 - sim.state.series.values().array()).matrix());
  spec.state = flipped;
  IrfResult b = estimate_lp(sim.ds, spec);
  for (int h = 0; h <= 4; ++h) {
    CHECK(a.diffs[0].rows[h].estimate == doctest::Approx(-b.diffs[0].rows[h].estimate));
    CHECK(a.diffs[0].rows[h].pvalue == doctest::Approx(b.diffs[0].rows[h].pvalue));
  }
}

TEST_CASE("horse race nests the two-state model when the second state is dropped") {
  SimData sim = simulate_two_regime(400, 1.0, 0.3, 109, 0.6);

  LpSpec two_state = basic_spec("z", "shock");
  two_state.state = sim.state;
  IrfResult two = estimate_lp(sim.ds, two_state);

  // Horse race against an all-zero second state: its block is dropped and
  // the remaining blocks reparametrize the two-state regression.
  LpSpec horse = basic_spec("z", "shock");
  horse.state = sim.state;
  horse.second_state = StateSeries{
      Series(Quarter(1900, 1), Eigen::VectorXd::Zero(sim.ds.length())), StateMode::dummy};
  IrfResult hr = estimate_horse_race(sim.ds, horse);

  const StateIrf* base = nullptr;
  const StateIrf* inter = nullptr;
  for (const auto& s : hr.states) {
    if (s.label == "baseline") base = &s;
    if (s.label == "cost") inter = &s;
  }
  REQUIRE(base);
  REQUIRE(inter);
  const StateIrf* hi = nullptr;
  const StateIrf* lo = nullptr;
  for (const auto& s : two.states) {
    if (s.label == "high") hi = &s;
    if (s.label == "low") lo = &s;
  }
  for (int h = 0; h <= 4; ++h) {
    CHECK(base->points[h].estimate == doctest::Approx(lo->points[h].estimate).epsilon(1e-8));
    CHECK(base->points[h].estimate + inter->points[h].estimate ==
          doctest::Approx(hi->points[h].estimate).epsilon(1e-8));
  }
}

TEST_CASE("horse race with two zero states collapses to the linear model") {
  SimData sim = simulate_two_regime(300, 0.5, 0.5, 113);
  LpSpec linear = basic_spec("z", "shock");
  IrfResult lin = estimate_lp(sim.ds, linear);

  LpSpec horse = basic_spec("z", "shock");
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(sim.ds.length());
  horse.state = StateSeries{Series(Quarter(1900, 1), zeros), StateMode::dummy};
  horse.second_state = StateSeries{Series(Quarter(1900, 1) + 1, zeros), StateMode::dummy};
  IrfResult hr = estimate_lp(sim.ds, horse);
  REQUIRE(hr.states.size() == 1);
  CHECK(hr.states[0].label == "baseline");
  for (int h = 0; h <= 4; ++h)
    CHECK(hr.states[0].points[h].estimate ==
          doctest::Approx(lin.states[0].points[h].estimate).epsilon(1e-10));
}

TEST_CASE("horse race rejects identical states and recovers planted interactions") {
  SimData sim = simulate_two_regime(1500, 0, 0, 127);
  LpSpec horse = basic_spec("z", "shock");
  horse.state = sim.state;
  horse.second_state = sim.state;
  CHECK_THROWS_AS(estimate_horse_race(sim.ds, horse), singular_design_error);

  // Independent states with interaction effects +1 and -1 on top of a unit base.
  long T = 1500;
  Rng rng(131);
  Eigen::VectorXd shock(T), z(T), ctrl(T), d1(T), d2(T);
  double a = 0, b = 0, c = 0;
  for (long t = 0; t < T; ++t) {
    a = 0.8 * a + rng.normal();
    b = 0.8 * b + rng.normal();
    d1[t] = a;
    d2[t] = b;
    shock[t] = rng.normal();
    c = 0.5 * c + rng.normal();
    ctrl[t] = c;
    double w1 = t > 0 && d1[t - 1] > 0 ? 1.0 : 0.0;
    double w2 = t > 0 && d2[t - 1] > 0 ? 1.0 : 0.0;
    z[t] = (1.0 + 1.0 * w1 - 1.0 * w2) * shock[t] + 0.5 * rng.normal();
  }
  Dataset ds(Quarter(1900, 1), T);
  ds.add("z", z);
  ds.add("shock", shock);
  ds.add("ctrl", ctrl);
  LpSpec spec = basic_spec("z", "shock");
  spec.state = build_state(Series(Quarter(1900, 1), d1), StateMode::dummy, 10.0, 1);
  spec.second_state = build_state(Series(Quarter(1900, 1), d2), StateMode::dummy, 10.0, 1);
  IrfResult r = estimate_horse_race(ds, spec);
  REQUIRE(r.diffs.size() == 2);
  CHECK(std::abs(r.diffs[0].rows[0].estimate - 1.0) < 3.0 * r.diffs[0].rows[0].se);
  CHECK(std::abs(r.diffs[1].rows[0].estimate + 1.0) < 3.0 * r.diffs[1].rows[0].se);
}

TEST_CASE("continuous state: response at zero state is the level block") {
  long T = 1200;
  Rng rng(137);
  Eigen::VectorXd shock(T), z(T), ctrl(T), level(T);
  double c = 0;
  for (long t = 0; t < T; ++t) {
    level[t] = rng.uniform();  // in [0,1)
    shock[t] = rng.normal();
    c = 0.5 * c + rng.normal();
    ctrl[t] = c;
    double s = t > 0 ? level[t - 1] : 0.0;
    z[t] = (0.5 + 2.0 * s) * shock[t] + 0.4 * rng.normal();
  }
  Dataset ds(Quarter(1900, 1), T);
  ds.add("z", z);
  ds.add("shock", shock);
  ds.add("ctrl", ctrl);
  LpSpec spec = basic_spec("z", "shock");
  spec.state = build_state(Series(Quarter(1900, 1), level), StateMode::continuous, 0.0, 1);

  IrfResult r = estimate_continuous(ds, spec, {0.0, 1.0});
  REQUIRE(r.states.size() == 2);
  // response(c=1) - response(c=0) estimates the interaction coefficient 2.
  double diff0 = r.states[1].points[0].estimate - r.states[0].points[0].estimate;
  CHECK(std::abs(diff0 - 2.0) < 3.0 * r.diffs[0].rows[0].se);
  CHECK(r.diffs[0].rows[0].estimate == doctest::Approx(diff0).epsilon(1e-10));

  // c = 0 equals the level-block coefficient alone.
  Design d = build_design(ds, spec, 0);
  RegressionResult fit = ols(d.y, d.X);
  CHECK(r.states[0].points[0].estimate == doctest::Approx(fit.coef[1]).epsilon(1e-12));

  // Default evaluation points are the 10th and 90th percentiles.
  IrfResult rp = estimate_continuous(ds, spec);
  Series core = spec.state->series.core();
  double p10 = percentile(core.values(), 0.10);
  double p90 = percentile(core.values(), 0.90);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "state=%g", p10);
  CHECK(rp.states[0].label == buf);
  std::snprintf(buf, sizeof(buf), "state=%g", p90);
  CHECK(rp.states[1].label == buf);

  // Out-of-range evaluation warns but does not fail.
  IrfResult rw = estimate_continuous(ds, spec, {-5.0, 0.5});
  CHECK(!rw.warnings.empty());
}

TEST_CASE("multiplier: known ratio is recovered and the identity holds exactly") {
  long T = 900;
  Rng rng(139);
  Eigen::VectorXd shock(T), g(T), y(T), ctrl(T);
  double c = 0;
  for (long t = 0; t < T; ++t) {
    shock[t] = rng.normal();
    g[t] = shock[t] + 0.1 * rng.normal();
    y[t] = 1.5 * g[t] + 0.1 * rng.normal();
    c = 0.5 * c + rng.normal();
    ctrl[t] = c;
  }
  Dataset ds(Quarter(1900, 1), T);
  ds.add("y", y);
  ds.add("g", g);
  ds.add("ctrl", ctrl);
  ds.add("shock", shock);

  LpSpec spec = basic_spec("y", "shock");
  spec.endogenous = "g";
  std::vector<Series> instruments{Series(Quarter(1900, 1), shock)};
  MultiplierResult m = estimate_multiplier(ds, spec, instruments);
  REQUIRE(m.irf.states.size() == 1);
  for (int h = 0; h <= 4; ++h) {
    CHECK(std::abs(m.irf.states[0].points[h].estimate - 1.5) <
          5.0 * m.irf.states[0].points[h].se + 0.02);
    CHECK(m.effective_f[0][h] > m.effective_f_crit[0][h]);  // strong instrument
  }

  // Wald identity: the LP-IV multiplier equals the ratio of cumulative
  // reduced-form coefficients from two projections sharing the design.
  for (int h = 0; h <= 4; ++h) {
    LpSpec ry = spec;
    ry.cumulative = true;
    Design dy = build_design(ds, ry, h);
    LpSpec rg = spec;
    rg.dependent = "g";
    rg.cumulative = true;
    Design dg = build_design(ds, rg, h);
    double by = ols(dy.y, dy.X).coef[1];
    double bg = ols(dg.y, dg.X).coef[1];
    CHECK(m.irf.states[0].points[h].estimate == doctest::Approx(by / bg).epsilon(1e-10));
  }
}

TEST_CASE("multiplier: state-dependent multipliers differ across regimes") {
  long T = 3000;
  Rng rng(149);
  Eigen::VectorXd shock(T), g(T), y(T), ctrl(T), driver(T);
  double d = 0, c = 0;
  for (long t = 0; t < T; ++t) {
    d = 0.9 * d + rng.normal();
    driver[t] = d;
    shock[t] = rng.normal();
    g[t] = shock[t] + 0.2 * rng.normal();
    double w = t > 0 && driver[t - 1] > 0 ? 1.0 : 0.0;
    y[t] = (w * 2.0 + (1.0 - w) * 0.5) * g[t] + 0.2 * rng.normal();
    c = 0.5 * c + rng.normal();
    ctrl[t] = c;
  }
  Dataset ds(Quarter(1600, 1), T);
  ds.add("y", y);
  ds.add("g", g);
  ds.add("ctrl", ctrl);
  LpSpec spec = basic_spec("y", "");
  spec.endogenous = "g";
  spec.horizon_max = 2;
  spec.state = build_state(Series(Quarter(1600, 1), driver), StateMode::dummy, 10.0, 1);
  std::vector<Series> instruments{Series(Quarter(1600, 1), shock)};
  MultiplierResult m = estimate_multiplier(ds, spec, instruments, 2);
  const StateIrf* hi = nullptr;
  const StateIrf* lo = nullptr;
  for (size_t s = 0; s < m.irf.states.size(); ++s) {
    if (m.irf.states[s].label == "high") hi = &m.irf.states[s];
    if (m.irf.states[s].label == "low") lo = &m.irf.states[s];
  }
  REQUIRE(hi);
  REQUIRE(lo);
  CHECK(std::abs(hi->points[0].estimate - 2.0) < 0.15);
  CHECK(std::abs(lo->points[0].estimate - 0.5) < 0.15);
  CHECK(m.irf.diffs[0].rows[0].pvalue < 0.01);
}

TEST_CASE("difference_table formats reporting horizons with stars") {
  IrfResult r;
  r.states.push_back({"low", std::vector<HorizonPoint>(17)});
  r.diffs.push_back({"high-low", std::vector<DiffRow>(17)});
  for (int h = 0; h <= 16; ++h) {
    r.states[0].points[h].estimate = 0.1 * h;
    DiffRow& d = r.diffs[0].rows[h];
    d.estimate = 1.0;
    d.se = 0.5;
    d.pvalue = h == 0 ? 0.04 : (h == 4 ? 0.5 : 0.009);
    d.stars = significance_stars(d.pvalue);
  }
  auto rows = difference_table(r);
  REQUIRE(rows.size() == 6);  // header + {0,4,8,12,16}
  CHECK(rows[0].find("horizon") == 0);
  CHECK(rows[1].find("**") != std::string::npos);
  CHECK(rows[1].find("***") == std::string::npos);
  CHECK(rows[2].find("*") == std::string::npos);
  CHECK(rows[3].find("***") != std::string::npos);
}
