#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "errors.hpp"
#include "model.hpp"

using namespace lyodry;

namespace {

// Constant-resistance configuration used by the frozen reference values.
ModelParams constant_rp_params() {
  ModelParams p;
  p.R_p = 1e5;
  p.R_p_A1 = 0.0;
  p.p_wc = 10.0;
  return p;
}

}  // namespace

TEST_CASE("saturation pressure follows the stated correlation") {
  ModelParams p;
  // Independent evaluation of ln p = a - b/T.
  const double expect = std::exp(28.8912 - 6139.9 / 233.15);
  CHECK(saturation_pressure(233.15, p) == doctest::Approx(expect));
  CHECK(saturation_pressure(233.15, p) == doctest::Approx(12.9).epsilon(0.01));

  // Strictly increasing in T.
  double prev = 0.0;
  for (double T = 200.0; T <= 280.0; T += 5.0) {
    const double v = saturation_pressure(T, p);
    CHECK(v > prev);
    prev = v;
  }

  // Algebraic identity ln(p) + b/T = a.
  const double T = 247.3;
  CHECK(std::log(saturation_pressure(T, p)) + p.psat_b / T ==
        doctest::Approx(p.psat_a).epsilon(1e-12));

  CHECK_THROWS_AS(saturation_pressure(0.0, p), std::domain_error);
  CHECK_THROWS_AS(saturation_pressure(-4.0, p), std::domain_error);
}

TEST_CASE("sublimation flux: driving force over resistance") {
  ModelParams p = constant_rp_params();
  const double psat = saturation_pressure(233.15, p);
  CHECK(sublimation_flux(233.15, 0.0, p) ==
        doctest::Approx((psat - 10.0) / 1e5));
  CHECK(sublimation_flux(233.15, 0.0, p) ==
        doctest::Approx(2.9e-5).epsilon(0.01));

  // Zero driving force.
  p.p_wc = psat;
  CHECK(sublimation_flux(233.15, 0.0, p) == doctest::Approx(0.0));

  // Doubling the resistance halves the flux.
  p.p_wc = 10.0;
  const double f1 = sublimation_flux(233.15, 0.0, p);
  p.R_p = 2e5;
  CHECK(sublimation_flux(233.15, 0.0, p) == doctest::Approx(0.5 * f1));

  // Condensing conditions give a negative flux, caller decides policy.
  p.R_p = 1e5;
  p.p_wc = psat + 5.0;
  CHECK(sublimation_flux(233.15, 0.0, p) < 0.0);
}

TEST_CASE("dried-layer resistance grows with interface position") {
  ModelParams p;
  p.R_p = 4e4;
  p.R_p_A1 = 3e7;
  p.R_p_A2 = 0.0;
  CHECK(mass_transfer_resistance(0.0, p) == doctest::Approx(4e4));
  CHECK(mass_transfer_resistance(0.005, p) == doctest::Approx(4e4 + 1.5e5));
  // Velocity decreases as the dried layer builds at fixed T_1.
  CHECK(interface_velocity(236.0, 0.006, p) <
        interface_velocity(236.0, 0.001, p));

  // With no layer dependence the velocity is independent of S.
  p.R_p_A1 = 0.0;
  CHECK(interface_velocity(236.0, 0.0, p) ==
        interface_velocity(236.0, 0.5 * p.H, p));
}

TEST_CASE("interface velocity: flux over density difference") {
  ModelParams p = constant_rp_params();
  const double Nw = sublimation_flux(233.15, 0.0, p);
  CHECK(interface_velocity(233.15, 0.0, p) ==
        doctest::Approx(Nw / (917.0 - 212.0)));
  CHECK(interface_velocity(233.15, 0.0, p) ==
        doctest::Approx(4.11e-8).epsilon(0.01));

  p.p_wc = saturation_pressure(233.15, p);
  CHECK(interface_velocity(233.15, 0.0, p) == doctest::Approx(0.0));
}

TEST_CASE("radiative heat source") {
  ModelParams p;
  p.F_side = 0.25;
  CHECK(radiative_heat(p.T_c, 0.0, p) == doctest::Approx(0.0));

  ModelParams p0 = p;
  p0.F_side = 0.0;
  CHECK(radiative_heat(211.0, 0.004, p0) == doctest::Approx(0.0));

  // Shrinking frozen volume concentrates the source: halving (H - S)
  // doubles it.
  const double q0 = radiative_heat(240.0, 0.0, p);
  const double qh = radiative_heat(240.0, 0.5 * p.H, p);
  CHECK(qh == doctest::Approx(2.0 * q0).epsilon(1e-12));
  CHECK(qh > q0);

  CHECK_THROWS_AS(radiative_heat(240.0, p.H, p), std::domain_error);
}

TEST_CASE("rhs: isolated equilibrium is stationary") {
  ModelParams p;
  p.K_v = 0.0;
  p.T0 = p.T_c;
  p.p_wc = saturation_pressure(p.T_c, p);
  Eigen::VectorXd y = pack(initial_state(p));
  y.head(p.n).setConstant(p.T_c);
  Eigen::VectorXd dy;
  model_rhs(p, y, 300.0, dy);
  CHECK(dy.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rhs: shelf temperature only enters the bottom node") {
  ModelParams p;
  Eigen::VectorXd y(p.n + 1);
  for (int i = 0; i < p.n; ++i) y[i] = 233.0 + 0.4 * i;
  y[p.n] = 0.002;
  Eigen::VectorXd da, db;
  model_rhs(p, y, 260.0, da);
  model_rhs(p, y, 271.5, db);
  for (int i = 0; i < p.n - 1; ++i) CHECK(da[i] == db[i]);
  CHECK(da[p.n] == db[p.n]);
  CHECK(da[p.n - 1] != db[p.n - 1]);
}

TEST_CASE("rhs errors") {
  ModelParams p;
  Eigen::VectorXd y = pack(initial_state(p));
  Eigen::VectorXd dy;
  y[p.n] = p.H;
  CHECK_THROWS_AS(model_rhs(p, y, 260.0, dy), std::domain_error);
  ModelParams bad;
  bad.n = 2;
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("initial state") {
  ModelParams p;
  ProductState s = initial_state(p);
  REQUIRE(s.T.size() == 20);
  for (int i = 0; i < p.n; ++i) CHECK(s.T[i] == 233.15);
  CHECK(s.S > 0.0);
  CHECK(s.S < 1e-5 * p.H);

  ProductState s2 = initial_state(p);
  CHECK(s2.S == s.S);
  CHECK((s2.T - s.T).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("manufactured profile: discrete diffusion converges at second order") {
  // Insulated configuration (no radiation, no flux, no shelf coupling) so the
  // rhs reduces to pure diffusion of T(xi) = 250 + 10 cos(pi xi), which
  // satisfies both zero-gradient boundary closures.
  auto max_error = [](int n) {
    ModelParams p;
    p.n = n;
    p.K_v = 0.0;
    p.F_side = 0.0;
    p.R_p_A1 = 0.0;
    p.R_p = 1e30;  // no flux, no grid motion
    const double S = 0.2 * p.H;
    Eigen::VectorXd y(n + 1);
    for (int i = 0; i < n; ++i) {
      const double xi = static_cast<double>(i) / (n - 1);
      y[i] = 250.0 + 10.0 * std::cos(M_PI * xi);
    }
    y[n] = S;
    Eigen::VectorXd dy;
    model_rhs(p, y, 250.0, dy);
    const double hs = p.H - S;
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xi = static_cast<double>(i) / (n - 1);
      const double truth =
          -p.alpha() * 10.0 * M_PI * M_PI * std::cos(M_PI * xi) / (hs * hs);
      err = std::max(err, std::abs(dy[i] - truth));
    }
    return err;
  };
  const double e1 = max_error(20), e2 = max_error(40), e3 = max_error(80);
  CHECK(std::log2(e1 / e2) > 1.8);
  CHECK(std::log2(e2 / e3) > 1.8);
}

TEST_CASE("rhs: trapezoidal enthalpy is conserved when isolated") {
  ModelParams p;
  p.K_v = 0.0;
  p.F_side = 0.0;
  p.R_p = 1e30;
  p.R_p_A1 = 0.0;
  const int n = p.n;
  Eigen::VectorXd y(n + 1);
  for (int i = 0; i < n; ++i)
    y[i] = 240.0 + 6.0 * std::sin(2.0 * i) + 0.3 * i;
  y[n] = 0.1 * p.H;
  Eigen::VectorXd dy;
  model_rhs(p, y, 260.0, dy);
  double sum = 0.5 * (dy[0] + dy[n - 1]);
  for (int i = 1; i < n - 1; ++i) sum += dy[i];
  CHECK(std::abs(sum) < 1e-9 * 240.0 * n);
}

TEST_CASE("jacobian structure: tridiagonal in T at a uniform profile") {
  ModelParams p;
  const int n = p.n;
  Eigen::VectorXd y(n + 1);
  y.head(n).setConstant(236.0);
  y[n] = 0.15 * p.H;
  Eigen::VectorXd f0, fp;
  model_rhs(p, y, 255.0, f0);
  Eigen::MatrixXd J(n + 1, n + 1);
  for (int j = 0; j <= n; ++j) {
    Eigen::VectorXd yp = y;
    const double dj = 1e-6 * std::max(std::abs(y[j]), 1e-4);
    yp[j] += dj;
    model_rhs(p, yp, 255.0, fp);
    J.col(j) = (fp - f0) / dj;
  }
  const double scale = J.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(i - j) > 1) CHECK(std::abs(J(i, j)) < 1e-7 * scale);
}
