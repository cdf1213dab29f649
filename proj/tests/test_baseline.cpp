#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "baseline.hpp"
#include "config.hpp"
#include "doctest.h"
#include "errors.hpp"

using namespace lyodry;

namespace {

Scenario coarse(const std::string& name) {
  Scenario sc = builtin_scenario(name);
  sc.params.n = 6;
  return sc;
}

}  // namespace

TEST_CASE("piecewise-constant control lookup") {
  CvpControl c;
  c.horizon = 10.0;
  c.values.resize(4);
  c.values << 1.0, 2.0, 3.0, 4.0;
  CHECK(c.value_at(0.0) == 1.0);
  CHECK(c.value_at(2.4) == 1.0);
  CHECK(c.value_at(2.5) == 2.0);
  CHECK(c.value_at(9.99) == 4.0);
  CHECK(c.value_at(10.0) == 4.0);  // clamped into the last interval
  CHECK(c.boundaries().size() == 5);
}

TEST_CASE("full heat with no limits reproduces the policy-1 drying time") {
  Scenario sc = coarse("custom");
  Solution sim = run(sc);
  CvpControl c;
  c.horizon = 2.0 * sim.t_f;
  c.values = Eigen::VectorXd::Constant(8, sc.bounds.tb_max);
  FixedControlResult r = simulate_fixed_control(c, sc);
  REQUIRE(r.t_f.has_value());
  CHECK(std::abs(*r.t_f - sim.t_f) / sim.t_f < 1e-3);
  CHECK(r.violation == 0.0);
}

TEST_CASE("zero driving force never finishes drying") {
  Scenario sc = coarse("custom");
  sc.params.F_side = 0.0;
  sc.params.T_c = sc.params.T0;
  sc.params.p_wc = saturation_pressure(sc.params.T0, sc.params);
  sc.params.R_p_A1 = 0.0;
  CvpControl c;
  c.horizon = 3600.0;
  c.values = Eigen::VectorXd::Constant(4, sc.params.T0);
  FixedControlResult r = simulate_fixed_control(c, sc);
  CHECK(!r.t_f.has_value());
  CHECK(r.terminal_S < 1e-3 * sc.params.H);
}

TEST_CASE("feasible control has zero violation measure") {
  Scenario sc = coarse("problem1");
  CvpControl c;
  c.horizon = 30.0 * 3600.0;
  c.values = Eigen::VectorXd::Constant(6, 235.0);  // gentle heat, stays cool
  FixedControlResult r = simulate_fixed_control(c, sc);
  CHECK(r.violation == 0.0);
}

TEST_CASE("policy-1 dominance: no feasible constant control dries faster") {
  Scenario sc = coarse("custom");
  Solution sim = run(sc);
  for (int i = 0; i < 20; ++i) {
    const double tb = sc.bounds.tb_min +
                      (sc.bounds.tb_max - sc.bounds.tb_min) * i / 19.0;
    CvpControl c;
    c.horizon = 3.0 * sim.t_f;
    c.values = Eigen::VectorXd::Constant(1, tb);
    FixedControlResult r = simulate_fixed_control(c, sc);
    if (!r.t_f || r.violation > 1e-3) continue;
    CHECK(sim.t_f <= *r.t_f * (1.0 + 1e-3));
  }
}

TEST_CASE("unconstrained search returns bang control at the upper bound") {
  Scenario sc = coarse("custom");
  Solution sim = run(sc);
  CvpReport rep = optimize_cvp(sc, 4, &sim, 400);
  REQUIRE(rep.t_f.has_value());
  for (int i = 0; i < rep.control.intervals(); ++i)
    CHECK(rep.control.values[i] == sc.bounds.tb_max);
  CHECK(*rep.t_f <= sim.t_f * 1.02);
  CHECK(rep.evaluations > 0);
}

TEST_CASE("the resampled reference solution is feasible and near-optimal") {
  Scenario sc = coarse("problem1");
  Solution sim = run(sc);
  CvpReport rep = optimize_cvp(sc, 16, &sim, 900);
  REQUIRE(rep.t_f.has_value());
  CHECK(rep.violation <= 1e-3);
  // The simulation-based drying time lower-bounds the search's best within 2%.
  CHECK(sim.t_f <= *rep.t_f * 1.02);
}

TEST_CASE("richer control grids do not hurt") {
  Scenario sc = coarse("problem1");
  Solution sim = run(sc);
  CvpReport r8 = optimize_cvp(sc, 8, &sim, 700);
  CvpReport r32 = optimize_cvp(sc, 32, &sim, 1800);
  REQUIRE(r8.t_f.has_value());
  REQUIRE(r32.t_f.has_value());
  CHECK(*r32.t_f <= *r8.t_f * (1.0 + 5e-3));
}

TEST_CASE("search determinism under a fixed seed") {
  Scenario sc = coarse("problem1");
  sc.num.seed = 777;
  Solution sim = run(sc);
  CvpReport a = optimize_cvp(sc, 8, &sim, 500);
  CvpReport b = optimize_cvp(sc, 8, &sim, 500);
  CHECK(a.evaluations == b.evaluations);
  REQUIRE(a.t_f.has_value());
  REQUIRE(b.t_f.has_value());
  CHECK(*a.t_f == *b.t_f);
  CHECK((a.control.values - b.control.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interval count outside [4, 64] is rejected") {
  Scenario sc = coarse("custom");
  CHECK_THROWS_AS(optimize_cvp(sc, 2, nullptr, 100), std::invalid_argument);
  CHECK_THROWS_AS(optimize_cvp(sc, 100, nullptr, 100), std::invalid_argument);
}
