#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "errors.hpp"
#include "integrator.hpp"
#include "linalg.hpp"

using namespace lyodry;

namespace {

RhsFn decay(double lam, double Tc) {
  return [lam, Tc](double, const Eigen::VectorXd& y, double,
                   Eigen::VectorXd& dy) {
    dy = -lam * (y.array() - Tc).matrix();
  };
}

ControlFn no_control() {
  return [](double) { return 0.0; };
}

}  // namespace

TEST_CASE("structured solver matches dense LU") {
  const int n = 21;
  JacobianPattern pat{n, {0, n - 1}};
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  std::srand(7);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool in_pattern = std::abs(i - j) <= 1 || j == 0 || j == n - 1;
      if (in_pattern) W(i, j) = -0.3 + 0.6 * (std::rand() / double(RAND_MAX));
    }
    W(i, i) += 4.0;  // dominance, as for I - h d J of a diffusion operator
  }
  Eigen::VectorXd b = Eigen::VectorXd::Random(n);
  StructuredSolver s;
  s.factor(W, &pat);
  Eigen::VectorXd x = s.solve(b);
  Eigen::VectorXd xd = W.partialPivLu().solve(b);
  CHECK((x - xd).cwiseAbs().maxCoeff() < 1e-11);

  StructuredSolver sd;
  sd.factor(W, nullptr);
  CHECK((sd.solve(b) - xd).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fd coloring groups cover all columns without row conflicts") {
  JacobianPattern pat{10, {0, 9}};
  auto groups = fd_groups(pat);
  std::vector<int> seen(10, 0);
  for (const auto& g : groups) {
    // Columns within a group may not touch a common row (band width 1).
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b)
        CHECK(std::abs(g[a] - g[b]) > 2);
    for (int c : g) seen[c] += 1;
  }
  for (int c = 0; c < 10; ++c) CHECK(seen[c] == 1);
}

TEST_CASE("bracketed root find") {
  auto f = [](double x) { return std::cos(x); };
  const double root = find_root_bracketed(f, 0.0, 3.0, 1e-12);
  CHECK(root == doctest::Approx(M_PI / 2).epsilon(1e-10));
  CHECK_THROWS_AS(find_root_bracketed(f, 0.0, 1.0, 1e-12),
                  infeasibility_error);
}

TEST_CASE("exponential decay matches the closed form within 10 rtol") {
  const double lam = 0.7, Tc = 290.0;
  Eigen::VectorXd y0(2);
  y0 << 340.0, 260.0;
  for (double rtol : {1e-6, 1e-8}) {
    IntegrationOptions opts;
    opts.rtol = rtol;
    opts.atol = 1e-12;
    opts.max_step = 1e9;
    auto res = integrate(decay(lam, Tc), no_control(), y0, 0.0, 10.0, {}, opts);
    REQUIRE(!res.event);
    const auto& last = res.trajectory.samples.back();
    CHECK(last.t == doctest::Approx(10.0));
    for (int i = 0; i < 2; ++i) {
      const double exact = Tc + (y0[i] - Tc) * std::exp(-lam * 10.0);
      CHECK(std::abs(last.y[i] - exact) / std::abs(exact) < 10.0 * rtol);
    }
  }
}

TEST_CASE("event time matches the analytic crossing") {
  const double lam = 0.5, Tc = 250.0, T0 = 330.0, X = 280.0;
  Eigen::VectorXd y0(1);
  y0 << T0;
  EventFunction e;
  e.g = [X](double, const Eigen::VectorXd& y, double) { return X - y[0]; };
  e.direction = +1;
  e.terminal = true;
  e.name = "crossing";
  IntegrationOptions opts;
  opts.event_tol = 1e-5;
  opts.max_step = 1e9;
  opts.rtol = 1e-9;  // solution error must stay below the event tolerance
  opts.atol = 1e-12;
  auto res = integrate(decay(lam, Tc), no_control(), y0, 0.0, 40.0, {e}, opts);
  REQUIRE(res.event.has_value());
  const double exact = std::log((T0 - Tc) / (X - Tc)) / lam;
  CHECK(std::abs(res.event->t - exact) < opts.event_tol);
  // No overshoot: nothing beyond the localized event time.
  for (const auto& s : res.trajectory.samples)
    CHECK(s.t <= res.event->t + opts.event_tol);
  CHECK(res.trajectory.samples.back().y[0] ==
        doctest::Approx(X).epsilon(1e-6));
}

TEST_CASE("zero-length span: one sample, no event") {
  Eigen::VectorXd y0(1);
  y0 << 300.0;
  auto res = integrate(decay(1.0, 250.0), no_control(), y0, 5.0, 5.0, {},
                       IntegrationOptions{});
  CHECK(res.trajectory.samples.size() == 1);
  CHECK(!res.event);
  CHECK(res.trajectory.samples[0].t == 5.0);
}

TEST_CASE("dense output") {
  // Linear-in-time solution: dy/dt = u with constant control.
  RhsFn f = [](double, const Eigen::VectorXd&, double u, Eigen::VectorXd& dy) {
    dy.resize(2);
    dy << u, 2.0 * u;
  };
  Eigen::VectorXd y0(2);
  y0 << 1.0, -1.0;
  IntegrationOptions opts;
  opts.max_step = 0.5;
  auto res = integrate(f, [](double) { return 3.0; }, y0, 0.0, 2.0, {}, opts);
  const auto& tr = res.trajectory;

  // Sample times reproduce the stored samples exactly.
  const auto& s = tr.samples[tr.samples.size() / 2];
  CHECK((tr.eval(s.t) - s.y).cwiseAbs().maxCoeff() == 0.0);

  // Midpoints of a linear solution are exact.
  const double tm = 0.5 * (tr.samples[0].t + tr.samples[1].t);
  CHECK(tr.eval(tm)[0] == doctest::Approx(1.0 + 3.0 * tm).epsilon(1e-13));
  CHECK(tr.eval(tm)[1] == doctest::Approx(-1.0 + 6.0 * tm).epsilon(1e-13));

  // Span end gives the final state.
  CHECK((tr.eval(tr.t_end()) - tr.samples.back().y).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK_THROWS_AS(tr.eval(tr.t_end() + 1.0), std::out_of_range);
}

TEST_CASE("stiff decay takes far fewer steps than the stiffness scale") {
  // The fast mode starts at tolerance level; only stability, not accuracy,
  // limits the step. Explicit methods would need ~ lam * t = 1e5 steps.
  const double lam = 1e3;
  Eigen::VectorXd y0(2);
  y0 << 1e-3, 2.0;
  RhsFn f = [lam](double, const Eigen::VectorXd& y, double,
                  Eigen::VectorXd& dy) {
    dy.resize(2);
    dy[0] = -lam * y[0];
    dy[1] = -0.01 * y[1];
  };
  IntegrationOptions opts;
  opts.rtol = 1e-6;
  opts.atol = 1e-6;
  opts.max_step = 1e9;
  auto res = integrate(f, no_control(), y0, 0.0, 100.0, {}, opts);
  CHECK(res.stats.accepted < 300);
  CHECK(std::abs(res.trajectory.samples.back().y[1] -
                 2.0 * std::exp(-1.0)) < 1e-4);
}

TEST_CASE("break times: control jumps are stepped onto exactly") {
  RhsFn f = [](double, const Eigen::VectorXd&, double u, Eigen::VectorXd& dy) {
    dy.resize(1);
    dy[0] = u;
  };
  ControlFn u = [](double t) { return t < 1.0 ? 2.0 : -1.0; };
  Eigen::VectorXd y0(1);
  y0 << 0.0;
  IntegrationOptions opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  auto res = integrate(f, u, y0, 0.0, 2.0, {}, opts, nullptr, {1.0});
  CHECK(std::abs(res.trajectory.samples.back().y[0] - 1.0) < 1e-9);
  bool hit = false;
  for (const auto& s : res.trajectory.samples)
    if (s.t == doctest::Approx(1.0).epsilon(1e-14)) hit = true;
  CHECK(hit);
}

TEST_CASE("identical inputs give identical trajectories") {
  Eigen::VectorXd y0(1);
  y0 << 320.0;
  EventFunction e;
  e.g = [](double, const Eigen::VectorXd& y, double) { return 280.0 - y[0]; };
  e.terminal = true;
  auto r1 = integrate(decay(0.4, 260.0), no_control(), y0, 0.0, 30.0, {e},
                      IntegrationOptions{});
  auto r2 = integrate(decay(0.4, 260.0), no_control(), y0, 0.0, 30.0, {e},
                      IntegrationOptions{});
  REQUIRE(r1.trajectory.samples.size() == r2.trajectory.samples.size());
  REQUIRE(r1.event.has_value());
  REQUIRE(r2.event.has_value());
  CHECK(r1.event->t == r2.event->t);
  for (std::size_t i = 0; i < r1.trajectory.samples.size(); ++i) {
    CHECK(r1.trajectory.samples[i].t == r2.trajectory.samples[i].t);
    CHECK(r1.trajectory.samples[i].y[0] == r2.trajectory.samples[i].y[0]);
  }
}

TEST_CASE("arming: an event starting on its manifold fires only after receding") {
  // y moves away from the manifold, comes back, crosses: must fire on the
  // return crossing, not at t0.
  RhsFn f = [](double t, const Eigen::VectorXd&, double, Eigen::VectorXd& dy) {
    dy.resize(1);
    dy[0] = std::cos(t);  // y = sin(t) from 0
  };
  Eigen::VectorXd y0(1);
  y0 << 0.0;
  EventFunction e;
  e.g = [](double, const Eigen::VectorXd& y, double) { return y[0]; };
  e.direction = +1;
  e.terminal = true;
  e.arm_margin = 0.05;
  IntegrationOptions opts;
  opts.max_step = 0.05;
  auto res = integrate(f, no_control(), y0, 0.0, 10.0, {e}, opts);
  REQUIRE(res.event.has_value());
  // sin crosses zero rising at 2 pi, after dipping to -1 (rearms the event).
  CHECK(res.event->t == doctest::Approx(2.0 * M_PI).epsilon(1e-3));
}

TEST_CASE("step-size underflow raises integration_error with the last time") {
  RhsFn f = [](double t, const Eigen::VectorXd&, double, Eigen::VectorXd& dy) {
    dy.resize(1);
    dy[0] = 1.0 / (1.0 - t);  // singularity at t = 1
  };
  Eigen::VectorXd y0(1);
  y0 << 0.0;
  IntegrationOptions opts;
  opts.rtol = 1e-8;
  try {
    integrate(f, no_control(), y0, 0.0, 2.0, {}, opts);
    FAIL("expected integration_error");
  } catch (const integration_error& e) {
    CHECK(e.t_last > 0.5);
    CHECK(e.t_last <= 1.0 + 1e-6);
  }
}
