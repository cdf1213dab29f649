#pragma once

#include <optional>

#include "collocation.hpp"
#include "model.hpp"

namespace lyodry {

enum class PolicyId { policy1 = 1, policy2 = 2, policy3 = 3 };
const char* policy_name(PolicyId id);

enum class SolverKind { adaptive_integrator, collocation };

struct ControlBounds {
  double tb_min = 228.0;
  double tb_max = 273.0;
  void validate() const;
};

// One control policy as a DAE system. Policy 1 fixes the control at a bound
// (index 1, adaptive integrator); policies 2 and 3 carry the control as an
// algebraic unknown pinned to tb0 at the segment start (collocation solver).
struct PolicySystem {
  PolicyId id;
  int differential_index = 1;
  SolverKind solver = SolverKind::adaptive_integrator;
  double control_level = 0.0;  // policy 1: T_b(t) = control_level
  std::optional<double> T_sp;  // policy 2 setpoint
  std::optional<double> v_sp;  // policy 3 setpoint
  double tb0 = 0.0;
  DaeResidual residual;
};

// Maximum heat input: T_b held at `level` (normally the upper bound).
PolicySystem policy1_system(const ModelParams& p, const ControlBounds& b,
                            double level);

// Product temperature tracking: T_n(t) = T_sp, index 2.
PolicySystem policy2_system(const ModelParams& p, double T_sp, double tb0);

// Interface velocity tracking: dS/dt = v_sp and f_4(T_1, S) = v_sp,
// index n + 1.
PolicySystem policy3_system(const ModelParams& p, double v_sp, double tb0);

// One-step index reduction of the temperature-tracking system: the shelf
// temperature that makes dT_n/dt = 0 at the given state. The bottom heat
// flux is strictly increasing in T_b, so the root is unique; it is bracketed
// in [tb_min - 50, tb_max + 50].
double policy2_reduced_control(const ProductState& s, const ModelParams& p,
                               double T_sp, const ControlBounds& b);

// Independent reference solution of the velocity-tracking system for small n:
// S(t) is linear by construction, T_1 follows from the flux constraint, each
// deeper node from the previous node's differential equation (time
// derivatives by nested central differences), and T_b from the bottom
// equation. Derivative-cascade noise grows with n; n <= 4 is enforced.
class CascadeOracle {
public:
  CascadeOracle(const ModelParams& p, double v_sp, double S0,
                double fd_step = 10.0);
  Eigen::VectorXd profile(double t) const;  // T_1..T_n
  double control(double t) const;           // T_b
  double interface_position(double t) const { return S0_ + v_sp_ * t; }

private:
  double node_value(int i, double t) const;
  double node_derivative(int i, double t) const;
  ModelParams p_;
  double v_sp_, S0_, h_;
};

}  // namespace lyodry
