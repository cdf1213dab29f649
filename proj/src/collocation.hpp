#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace lyodry {

// Radau IIA collocation nodes on (0, 1], right end included. c in {2, 3, 5}.
const std::vector<double>& radau_nodes(int c);

// Derivative matrix of the Lagrange basis on the c+1 points {0, tau_1..tau_c},
// evaluated at the collocation nodes: D(j, l) = l_l'(tau_{j+1}).
Eigen::MatrixXd lagrange_diff_matrix(const std::vector<double>& pts);

// Lagrange interpolation through (pts[l], vals.col(l)).
Eigen::VectorXd lagrange_eval(const std::vector<double>& pts,
                              const Eigen::MatrixXd& vals, double x);

struct CollocationMesh {
  std::vector<double> bounds;  // element boundaries, strictly increasing
  int points = 3;              // collocation points per element

  static CollocationMesh uniform(double t0, double t1, double dt_element,
                                 int points);
  int elements() const { return static_cast<int>(bounds.size()) - 1; }
  double t0() const { return bounds.front(); }
  double t1() const { return bounds.back(); }
};

// One DAE system: differential equations stacked over algebraic constraints,
// r(t, x, xdot, u) with n_diff + n_alg entries. Scales condition the Newton
// system (states and residual rows are normalized before solving).
struct DaeResidual {
  int n_diff = 0;
  int n_alg = 0;
  std::function<void(double t, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xdot, double u, Eigen::VectorXd& r)>
      residual;
  Eigen::VectorXd state_scale;     // n_diff entries
  double control_scale = 1.0;
  Eigen::VectorXd residual_scale;  // n_diff + n_alg entries; differential rows
                                   // are additionally multiplied by the
                                   // element width
};

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  bool damped = false;  // line search engaged at least once
};

// Damped Newton with dense finite-difference Jacobian and residual-norm line
// search. The workspace keeps the factored Jacobian so successive nearby
// solves (element marching) can reuse it.
class NewtonWorkspace {
public:
  using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  NewtonResult solve(const ResidualFn& fn, const Eigen::VectorXd& x0,
                     double tol, int max_iter, bool reuse_jacobian);
  void invalidate() { have_jac_ = false; }

private:
  void build_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& fx);
  Eigen::MatrixXd J_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool have_jac_ = false;
};

NewtonResult newton_solve(const NewtonWorkspace::ResidualFn& fn,
                          const Eigen::VectorXd& x0, double tol,
                          int max_iter = 50);

// Simultaneous collocation solution, marched element by element (the global
// collocation system is block lower-triangular in element order, so this is
// the same solution). States are continuous across elements; the control is a
// per-element polynomial, anchored at tb0 on the first element.
class CollocationSolution {
public:
  CollocationMesh mesh;
  int nx = 0;
  Eigen::VectorXd x0;
  double tb0 = 0.0;
  std::vector<Eigen::MatrixXd> states;    // per element, nx x c
  std::vector<Eigen::VectorXd> controls;  // per element, c
  double max_residual = 0.0;              // scaled, over all collocation points
  long newton_iters = 0;

  double t0() const { return mesh.t0(); }
  double t1() const { return mesh.t1(); }
  Eigen::VectorXd state_at(double t) const;
  double control_at(double t) const;
  const Eigen::VectorXd element_start(int k) const;

private:
  int locate(double t) const;
};

// Solves one event-free segment of the DAE. state0 is the differential
// initial condition (consistency with the constraints is not required; the
// solution then carries a fast transient in the first element), tb0 pins the
// control at the segment start. Residuals at every collocation point are
// driven below tol in scaled units.
CollocationSolution solve_segment(const DaeResidual& res,
                                  const Eigen::VectorXd& state0, double tb0,
                                  const CollocationMesh& mesh, double tol);

}  // namespace lyodry
