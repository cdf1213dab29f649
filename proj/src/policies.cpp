#include "policies.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"
#include "linalg.hpp"

namespace lyodry {

const char* policy_name(PolicyId id) {
  switch (id) {
    case PolicyId::policy1: return "policy1";
    case PolicyId::policy2: return "policy2";
    case PolicyId::policy3: return "policy3";
  }
  return "?";
}

void ControlBounds::validate() const {
  if (!(tb_min < tb_max)) throw config_error("tb_min must be below tb_max");
  if (!(tb_min > 0)) throw config_error("tb_min must be > 0");
}

namespace {

Eigen::VectorXd default_state_scale(const ModelParams& p) {
  Eigen::VectorXd s = Eigen::VectorXd::Constant(p.n + 1, 100.0);
  s[p.n] = p.H;
  return s;
}

}  // namespace

PolicySystem policy1_system(const ModelParams& p, const ControlBounds& b,
                            double level) {
  b.validate();
  PolicySystem sys;
  sys.id = PolicyId::policy1;
  sys.differential_index = 1;
  sys.solver = SolverKind::adaptive_integrator;
  sys.control_level = level;
  sys.tb0 = level;
  sys.residual.n_diff = p.n + 1;
  sys.residual.n_alg = 0;
  sys.residual.state_scale = default_state_scale(p);
  sys.residual.control_scale = 100.0;
  sys.residual.residual_scale = sys.residual.state_scale.cwiseInverse();
  sys.residual.residual = [p, level](double, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& xdot, double,
                                     Eigen::VectorXd& r) {
    Eigen::VectorXd f;
    model_rhs(p, x, level, f);
    r = xdot - f;
  };
  return sys;
}

PolicySystem policy2_system(const ModelParams& p, double T_sp, double tb0) {
  PolicySystem sys;
  sys.id = PolicyId::policy2;
  sys.differential_index = 2;
  sys.solver = SolverKind::collocation;
  sys.T_sp = T_sp;
  sys.tb0 = tb0;
  const int n = p.n;
  sys.residual.n_diff = n + 1;
  sys.residual.n_alg = 1;
  sys.residual.state_scale = default_state_scale(p);
  sys.residual.control_scale = 100.0;
  Eigen::VectorXd rs(n + 2);
  rs.head(n + 1) = sys.residual.state_scale.cwiseInverse();
  rs[n + 1] = 1.0 / 100.0;
  sys.residual.residual_scale = rs;
  // Capped rhs: Newton iterates may transiently overshoot S toward H.
  sys.residual.residual = [p, T_sp, n](double, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& xdot, double u,
                                       Eigen::VectorXd& r) {
    Eigen::VectorXd f;
    model_rhs_capped(p, x, u, f);
    r.resize(n + 2);
    r.head(n + 1) = xdot - f;
    r[n + 1] = x[n - 1] - T_sp;
  };
  return sys;
}

PolicySystem policy3_system(const ModelParams& p, double v_sp, double tb0) {
  if (!(v_sp > 0)) throw std::invalid_argument("policy3: v_sp must be > 0");
  PolicySystem sys;
  sys.id = PolicyId::policy3;
  sys.differential_index = p.n + 1;
  sys.solver = SolverKind::collocation;
  sys.v_sp = v_sp;
  sys.tb0 = tb0;
  const int n = p.n;
  sys.residual.n_diff = n + 1;
  sys.residual.n_alg = 1;
  sys.residual.state_scale = default_state_scale(p);
  sys.residual.control_scale = 100.0;
  Eigen::VectorXd rs(n + 2);
  rs.head(n + 1) = sys.residual.state_scale.cwiseInverse();
  rs[n + 1] = 1.0 / v_sp;
  sys.residual.residual_scale = rs;
  sys.residual.residual = [p, v_sp, n](double, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& xdot, double u,
                                       Eigen::VectorXd& r) {
    Eigen::VectorXd f;
    model_rhs_capped(p, x, u, f);
    r.resize(n + 2);
    r.head(n) = xdot.head(n) - f.head(n);
    r[n] = xdot[n] - v_sp;  // forced interface motion
    r[n + 1] = interface_velocity(x[0], x[n], p) - v_sp;
  };
  return sys;
}

double policy2_reduced_control(const ProductState& s, const ModelParams& p,
                               double /*T_sp*/, const ControlBounds& b) {
  Eigen::VectorXd y = pack(s);
  Eigen::VectorXd f(p.n + 1);
  auto bottom_rate = [&](double tb) {
    model_rhs(p, y, tb, f);
    return f[p.n - 1];
  };
  return find_root_bracketed(bottom_rate, b.tb_min - 50.0, b.tb_max + 50.0,
                             1e-10);
}

CascadeOracle::CascadeOracle(const ModelParams& p, double v_sp, double S0,
                             double fd_step)
    : p_(p), v_sp_(v_sp), S0_(S0), h_(fd_step) {
  if (p.n > 4)
    throw std::invalid_argument(
        "cascade oracle limited to n <= 4 (derivative noise grows with n)");
  if (!(v_sp > 0)) throw std::invalid_argument("cascade oracle: v_sp <= 0");
}

// T_{i} (0-based node i) along the exact tracking solution.
double CascadeOracle::node_value(int i, double t) const {
  const double S = S0_ + v_sp_ * t;
  if (i == 0) {
    // Flux constraint: p_sat(T_1) = p_wc + v_sp (rho_f - rho_e) R_p(S).
    const double pt =
        p_.p_wc + v_sp_ * (p_.rho_f - p_.rho_e) * mass_transfer_resistance(S, p_);
    if (!(pt > 0)) throw infeasibility_error("cascade: target pressure <= 0");
    const double den = p_.psat_a - std::log(pt);
    if (!(den > 0)) throw infeasibility_error("cascade: pressure out of range");
    return p_.psat_b / den;
  }
  // Node i from the differential equation of node i-1, which is linear in
  // T_{i}. Two-point secant is exact for a linear equation.
  Eigen::VectorXd y(p_.n + 1);
  const double anchor = node_value(i - 1, t);
  for (int k = 0; k < i; ++k) y[k] = k == i - 1 ? anchor : node_value(k, t);
  for (int k = i; k < p_.n; ++k) y[k] = anchor;  // rows >= i do not matter
  y[p_.n] = S;
  const double target = node_derivative(i - 1, t);
  Eigen::VectorXd f(p_.n + 1);
  auto row = [&](double Ti) {
    y[i] = Ti;
    model_rhs(p_, y, anchor /*placeholder Tb*/, f);
    return f[i - 1] - target;
  };
  const double x0 = anchor, x1 = anchor + 1.0;
  const double f0 = row(x0), f1 = row(x1);
  if (std::abs(f1 - f0) < 1e-30)
    throw infeasibility_error("cascade: level insensitive to next node");
  return x0 - f0 * (x1 - x0) / (f1 - f0);
}

double CascadeOracle::node_derivative(int i, double t) const {
  return (node_value(i, t + h_) - node_value(i, t - h_)) / (2.0 * h_);
}

Eigen::VectorXd CascadeOracle::profile(double t) const {
  Eigen::VectorXd T(p_.n);
  for (int i = 0; i < p_.n; ++i) T[i] = node_value(i, t);
  return T;
}

double CascadeOracle::control(double t) const {
  Eigen::VectorXd y(p_.n + 1);
  y.head(p_.n) = profile(t);
  y[p_.n] = S0_ + v_sp_ * t;
  const double target = node_derivative(p_.n - 1, t);
  Eigen::VectorXd f(p_.n + 1);
  auto row = [&](double tb) {
    model_rhs(p_, y, tb, f);
    return f[p_.n - 1] - target;
  };
  const double x0 = y[p_.n - 1], x1 = x0 + 1.0;
  const double f0 = row(x0), f1 = row(x1);
  if (std::abs(f1 - f0) < 1e-30)
    throw infeasibility_error("cascade: bottom equation insensitive to T_b");
  return x0 - f0 * (x1 - x0) / (f1 - f0);
}

}  // namespace lyodry
