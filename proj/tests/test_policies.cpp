#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "errors.hpp"
#include "policies.hpp"

using namespace lyodry;

namespace {

ControlBounds problem1_bounds() { return {228.0, 273.0}; }

// State on the velocity-tracking manifold built from the cascade solution.
Eigen::VectorXd cascade_state(const CascadeOracle& oracle,
                              const ModelParams& p, double t, double S0,
                              double v_sp) {
  Eigen::VectorXd y(p.n + 1);
  y.head(p.n) = oracle.profile(t);
  y[p.n] = S0 + v_sp * t;
  return y;
}

}  // namespace

TEST_CASE("three policies, distinct ids, solver kind matches the index") {
  ModelParams p;
  ControlBounds b = problem1_bounds();
  PolicySystem g1 = policy1_system(p, b, b.tb_max);
  PolicySystem g2 = policy2_system(p, 243.0, 270.0);
  PolicySystem g3 = policy3_system(p, 2.8e-7, 250.0);

  CHECK(g1.id != g2.id);
  CHECK(g2.id != g3.id);
  CHECK(g1.differential_index == 1);
  CHECK(g2.differential_index == 2);
  CHECK(g3.differential_index == p.n + 1);
  CHECK(g3.differential_index == 21);  // n = 20
  CHECK(g1.solver == SolverKind::adaptive_integrator);
  CHECK(g2.solver == SolverKind::collocation);
  CHECK(g3.solver == SolverKind::collocation);
  CHECK(!g1.T_sp);
  CHECK(!g1.v_sp);
  CHECK(g2.T_sp == 243.0);
  CHECK(g3.v_sp == 2.8e-7);
  CHECK_THROWS_AS(policy3_system(p, -1e-7, 250.0), std::invalid_argument);
}

TEST_CASE("policy 1: control law pinned at the upper bound") {
  ModelParams p;
  ControlBounds b = problem1_bounds();
  PolicySystem g1 = policy1_system(p, b, b.tb_max);
  CHECK(g1.control_level == 273.0);

  // Residual vanishes exactly when xdot = f(x, tb_max).
  Eigen::VectorXd y = pack(initial_state(p));
  Eigen::VectorXd f;
  model_rhs(p, y, 273.0, f);
  Eigen::VectorXd r;
  g1.residual.residual(0.0, y, f, 0.0, r);
  CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy 2: constraint residual and tracked setpoint") {
  ModelParams p;
  PolicySystem g2 = policy2_system(p, 243.0, 270.0);
  Eigen::VectorXd y = pack(initial_state(p));
  y[p.n - 1] = 243.0;
  Eigen::VectorXd f;
  model_rhs(p, y, 270.0, f);
  Eigen::VectorXd r;
  g2.residual.residual(0.0, y, f, 270.0, r);
  CHECK(r[p.n + 1] == 0.0);  // T_n at the setpoint
  CHECK(r.head(p.n + 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy 2 collocation holds T_n at the setpoint") {
  ModelParams p;
  // Start on the constraint: bottom node at the setpoint, mild gradient.
  const double T_sp = 239.0;
  Eigen::VectorXd y(p.n + 1);
  for (int i = 0; i < p.n; ++i)
    y[i] = T_sp - 2.0 * (p.n - 1 - i) / double(p.n - 1);
  y[p.n] = 0.1 * p.H;
  ProductState st = unpack(y);
  const double tb0 =
      policy2_reduced_control(st, p, T_sp, problem1_bounds());
  PolicySystem g2 = policy2_system(p, T_sp, tb0);
  CollocationMesh mesh = CollocationMesh::uniform(0.0, 1800.0, 60.0, 3);
  CollocationSolution sol = solve_segment(g2.residual, y, tb0, mesh, 1e-10);
  for (int k = 0; k < mesh.elements(); ++k)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(sol.states[k](p.n - 1, j) - T_sp) < 1e-6);
  CHECK(sol.control_at(0.0) == tb0);
}

TEST_CASE("policy 3: forced interface motion pins the interface temperature") {
  ModelParams p;
  p.n = 3;
  const double S0 = 1e-6 * p.H;
  const double v_sp = 2.5e-7;
  PolicySystem g3 = policy3_system(p, v_sp, 233.0);
  CHECK(g3.differential_index == 4);

  // The constraint root: p_sat(T_1) = p_wc + v_sp (rho_f - rho_e) R_p(S).
  const double t = 4000.0;
  const double S = S0 + v_sp * t;
  const double pt =
      p.p_wc + v_sp * (p.rho_f - p.rho_e) * mass_transfer_resistance(S, p);
  const double T1 = p.psat_b / (p.psat_a - std::log(pt));
  CHECK(interface_velocity(T1, S, p) == doctest::Approx(v_sp).epsilon(1e-12));

  CascadeOracle oracle(p, v_sp, S0);
  CHECK(oracle.profile(t)[0] == doctest::Approx(T1).epsilon(1e-12));
}

TEST_CASE("cascade oracle: consistent start and affine interface") {
  ModelParams p;
  p.n = 3;
  const double S0 = 1e-6 * p.H;
  // v_sp equal to the initial-velocity: T_1(0) = T0 (constraint already met).
  const double v0 = interface_velocity(p.T0, S0, p);
  CascadeOracle oracle(p, v0, S0);
  CHECK(oracle.profile(0.0)[0] == doctest::Approx(p.T0).epsilon(1e-10));
  CHECK(oracle.interface_position(1234.0) ==
        doctest::Approx(S0 + v0 * 1234.0));
  ModelParams big;
  big.n = 8;
  CHECK_THROWS_AS(CascadeOracle(big, 1e-7, S0), std::invalid_argument);
}

TEST_CASE("cascade oracle matches collocation on the n = 3 tracking system") {
  ModelParams p;
  p.n = 3;
  const double S0 = 1e-6 * p.H;
  const double v_sp = 2.5e-7;
  CascadeOracle oracle(p, v_sp, S0);

  // Consistent start on the tracking manifold.
  Eigen::VectorXd y0 = cascade_state(oracle, p, 0.0, S0, v_sp);
  const double tb0 = oracle.control(0.0);
  PolicySystem g3 = policy3_system(p, v_sp, tb0);
  CollocationMesh mesh = CollocationMesh::uniform(0.0, 3600.0, 60.0, 3);
  CollocationSolution sol = solve_segment(g3.residual, y0, tb0, mesh, 1e-11);

  const auto& tau = radau_nodes(3);
  double worst = 0.0;
  for (int k = 0; k < mesh.elements(); ++k) {
    const double h = mesh.bounds[k + 1] - mesh.bounds[k];
    for (int j = 0; j < 3; ++j) {
      const double t = mesh.bounds[k] + h * tau[j];
      const double rel =
          std::abs(sol.controls[k][j] - oracle.control(t)) /
          std::abs(oracle.control(t));
      worst = std::max(worst, rel);
      // Forced dS/dt: the interface trajectory is affine in time.
      CHECK(std::abs(sol.states[k](p.n, j) - (S0 + v_sp * t)) < 1e-12);
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("policy2_reduced_control") {
  ModelParams p;
  ControlBounds b = problem1_bounds();

  // Global equilibrium with zero flux: the holding control equals T_n.
  {
    ModelParams pe = p;
    pe.F_side = 0.0;
    pe.p_wc = saturation_pressure(240.0, pe);
    ProductState st;
    st.T = Eigen::VectorXd::Constant(pe.n, 240.0);
    st.S = 0.1 * pe.H;
    CHECK(policy2_reduced_control(st, pe, 240.0, b) ==
          doctest::Approx(240.0).epsilon(1e-10));
  }

  // A hotter neighbor node lowers the required shelf temperature (the
  // diffusive gain is large, so keep the bump small).
  {
    ProductState st;
    st.T = Eigen::VectorXd::Constant(p.n, 240.0);
    st.S = 0.2 * p.H;
    const double tb_a = policy2_reduced_control(st, p, 240.0, b);
    st.T[p.n - 2] += 0.02;
    const double tb_b = policy2_reduced_control(st, p, 240.0, b);
    CHECK(tb_b < tb_a - 1.0);
  }

  // No sign change in the bracket: infeasibility.
  {
    ModelParams hot = p;
    hot.K_v = 0.0;
    hot.F_side = 1.0;
    hot.T_c = 400.0;  // radiation alone overheats; no T_b can hold T_n
    ProductState st;
    st.T = Eigen::VectorXd::Constant(hot.n, 240.0);
    st.S = 0.2 * hot.H;
    CHECK_THROWS_AS(policy2_reduced_control(st, hot, 240.0, b),
                    infeasibility_error);
  }
}

TEST_CASE("reduced control agrees with collocation after the first element") {
  ModelParams p;
  const double T_sp = 239.0;
  ControlBounds b = problem1_bounds();
  Eigen::VectorXd y(p.n + 1);
  for (int i = 0; i < p.n; ++i)
    y[i] = T_sp - 1.5 * (p.n - 1 - i) / double(p.n - 1);
  y[p.n] = 0.15 * p.H;
  const double tb0 = policy2_reduced_control(unpack(y), p, T_sp, b);
  PolicySystem g2 = policy2_system(p, T_sp, tb0);
  CollocationMesh mesh = CollocationMesh::uniform(0.0, 1200.0, 60.0, 3);
  CollocationSolution sol = solve_segment(g2.residual, y, tb0, mesh, 1e-10);

  const auto& tau = radau_nodes(3);
  for (int k = 1; k < mesh.elements(); ++k) {
    const double h = mesh.bounds[k + 1] - mesh.bounds[k];
    for (int j = 0; j < 3; ++j) {
      const double t = mesh.bounds[k] + h * tau[j];
      ProductState st = unpack(sol.state_at(t));
      const double tb_red = policy2_reduced_control(st, p, T_sp, b);
      CHECK(std::abs(tb_red - sol.controls[k][j]) < 0.1);
    }
  }
}
