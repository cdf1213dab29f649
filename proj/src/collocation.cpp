#include "collocation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace lyodry {

const std::vector<double>& radau_nodes(int c) {
  static const std::vector<double> r2 = {1.0 / 3.0, 1.0};
  static const std::vector<double> r3 = {0.15505102572168220, 0.64494897427831781, 1.0};
  static const std::vector<double> r5 = {0.05710419611451768, 0.27684301363812383,
                                         0.58359043236891682, 0.86024013565621944, 1.0};
  switch (c) {
    case 2: return r2;
    case 3: return r3;
    case 5: return r5;
    default: throw config_error("collocation points must be 2, 3 or 5");
  }
}

Eigen::MatrixXd lagrange_diff_matrix(const std::vector<double>& pts) {
  const int m = static_cast<int>(pts.size());
  Eigen::MatrixXd D(m - 1, m);
  for (int j = 1; j < m; ++j) {
    for (int l = 0; l < m; ++l) {
      if (l == j) {
        double s = 0.0;
        for (int k = 0; k < m; ++k)
          if (k != j) s += 1.0 / (pts[j] - pts[k]);
        D(j - 1, l) = s;
      } else {
        double num = 1.0, den = 1.0;
        for (int k = 0; k < m; ++k) {
          if (k == l) continue;
          den *= pts[l] - pts[k];
          if (k != j) num *= pts[j] - pts[k];
        }
        D(j - 1, l) = num / den;
      }
    }
  }
  return D;
}

Eigen::VectorXd lagrange_eval(const std::vector<double>& pts,
                              const Eigen::MatrixXd& vals, double x) {
  const int m = static_cast<int>(pts.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(vals.rows());
  for (int l = 0; l < m; ++l) {
    double w = 1.0;
    for (int k = 0; k < m; ++k)
      if (k != l) w *= (x - pts[k]) / (pts[l] - pts[k]);
    out += w * vals.col(l);
  }
  return out;
}

CollocationMesh CollocationMesh::uniform(double t0, double t1,
                                         double dt_element, int points) {
  if (!(t1 > t0)) throw std::invalid_argument("mesh span must be positive");
  if (!(dt_element > 0)) throw std::invalid_argument("dt_element must be > 0");
  radau_nodes(points);  // validates the point count
  const double span = t1 - t0;
  const int ne = std::max(1, static_cast<int>(std::lround(span / dt_element)));
  CollocationMesh mesh;
  mesh.points = points;
  mesh.bounds.resize(ne + 1);
  for (int i = 0; i <= ne; ++i)
    mesh.bounds[i] = t0 + span * static_cast<double>(i) / ne;
  return mesh;
}

void NewtonWorkspace::build_jacobian(const ResidualFn& fn,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& fx) {
  (void)fx;
  const int n = static_cast<int>(x.size());
  J_.resize(fx.size(), n);
  Eigen::VectorXd xp = x;
  // Central differences: the stiffest elements amplify Jacobian error into
  // the Newton contraction rate, and forward differences stall above tight
  // residual tolerances.
  for (int j = 0; j < n; ++j) {
    const double dj = 6e-6 * std::max(std::abs(x[j]), 1.0);
    xp[j] = x[j] + dj;
    Eigen::VectorXd fp = fn(xp);
    xp[j] = x[j] - dj;
    J_.col(j) = (fp - fn(xp)) / (2.0 * dj);
    xp[j] = x[j];
  }
  lu_.compute(J_);
  const auto& diag = lu_.matrixLU().diagonal();
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (diag.cwiseAbs().minCoeff() < 1e-14 * std::max(dmax, 1e-30))
    throw structural_error("singular collocation system");
  have_jac_ = true;
}

NewtonResult NewtonWorkspace::solve(const ResidualFn& fn,
                                    const Eigen::VectorXd& x0, double tol,
                                    int max_iter, bool reuse_jacobian) {
  NewtonResult out;
  out.x = x0;
  Eigen::VectorXd r = fn(out.x);
  double rn = r.lpNorm<Eigen::Infinity>();
  if (!reuse_jacobian || !have_jac_ || J_.cols() != x0.size()) {
    build_jacobian(fn, out.x, r);
  }
  bool fresh = !reuse_jacobian;

  while (true) {
    if (rn <= tol) {
      out.converged = true;
      out.residual_norm = rn;
      return out;
    }
    if (out.iterations >= max_iter) break;

    Eigen::VectorXd delta = -lu_.solve(r);
    double lambda = 1.0;
    bool stepped = false;
    Eigen::VectorXd xt, rt;
    double rtn = 0.0;
    for (int half = 0; half < 9; ++half, lambda *= 0.5) {
      xt = out.x + lambda * delta;
      // An iterate outside the physical domain just fails the line search.
      try {
        rt = fn(xt);
      } catch (const std::domain_error&) {
        continue;
      }
      rtn = rt.lpNorm<Eigen::Infinity>();
      if (rtn < (1.0 - 1e-4 * lambda) * rn) {
        stepped = true;
        break;
      }
    }
    if (!stepped) {
      if (!fresh) {
        build_jacobian(fn, out.x, r);
        fresh = true;
        continue;
      }
      break;
    }
    if (lambda < 1.0) out.damped = true;
    const double ratio = rtn / rn;
    out.x = xt;
    r = rt;
    rn = rtn;
    ++out.iterations;
    // Refresh a stale Jacobian when contraction degrades.
    if (!fresh && (lambda < 1.0 || ratio > 0.5)) {
      build_jacobian(fn, out.x, r);
      fresh = true;
    } else {
      fresh = false;
    }
  }
  out.residual_norm = rn;
  return out;
}

NewtonResult newton_solve(const NewtonWorkspace::ResidualFn& fn,
                          const Eigen::VectorXd& x0, double tol,
                          int max_iter) {
  NewtonWorkspace ws;
  return ws.solve(fn, x0, tol, max_iter, false);
}

int CollocationSolution::locate(double t) const {
  const auto& b = mesh.bounds;
  if (t < b.front() - 1e-9 || t > b.back() + 1e-9)
    throw std::out_of_range("time outside collocation span");
  auto it = std::upper_bound(b.begin(), b.end(), t);
  int k = static_cast<int>(it - b.begin()) - 1;
  return std::clamp(k, 0, mesh.elements() - 1);
}

const Eigen::VectorXd CollocationSolution::element_start(int k) const {
  return k == 0 ? x0 : states[k - 1].col(states[k - 1].cols() - 1);
}

Eigen::VectorXd CollocationSolution::state_at(double t) const {
  const int k = locate(t);
  const double h = mesh.bounds[k + 1] - mesh.bounds[k];
  const double s = (t - mesh.bounds[k]) / h;
  const auto& tau = radau_nodes(mesh.points);
  std::vector<double> pts(tau.size() + 1, 0.0);
  std::copy(tau.begin(), tau.end(), pts.begin() + 1);
  Eigen::MatrixXd vals(nx, mesh.points + 1);
  vals.col(0) = element_start(k);
  vals.rightCols(mesh.points) = states[k];
  return lagrange_eval(pts, vals, s);
}

double CollocationSolution::control_at(double t) const {
  const int k = locate(t);
  const double h = mesh.bounds[k + 1] - mesh.bounds[k];
  const double s = (t - mesh.bounds[k]) / h;
  const auto& tau = radau_nodes(mesh.points);
  if (k == 0) {
    // The first element carries the control pin at its left end.
    std::vector<double> pts(tau.size() + 1, 0.0);
    std::copy(tau.begin(), tau.end(), pts.begin() + 1);
    Eigen::MatrixXd vals(1, mesh.points + 1);
    vals(0, 0) = tb0;
    vals.block(0, 1, 1, mesh.points) = controls[0].transpose();
    return lagrange_eval(pts, vals, s)[0];
  }
  Eigen::MatrixXd vals(1, mesh.points);
  vals.row(0) = controls[k].transpose();
  return lagrange_eval(tau, vals, s)[0];
}

namespace {

// Element-local nonlinear system in scaled unknowns
// X = [x_1 .. x_c (each nx), u_1 .. u_c].
struct ElementSystem {
  const DaeResidual* res;
  const Eigen::MatrixXd* D;  // c x (c+1)
  std::vector<double> node_t;
  double h;
  Eigen::VectorXd x_start;
  int c, nx;

  Eigen::VectorXd operator()(const Eigen::VectorXd& X) const {
    const int nd = res->n_diff, na = res->n_alg;
    Eigen::VectorXd out(c * (nd + na));
    Eigen::VectorXd xj(nd), xdot(nd), r(nd + na);
    for (int j = 0; j < c; ++j) {
      xj = X.segment(j * nx, nx).cwiseProduct(res->state_scale);
      xdot = (*D)(j, 0) * x_start;
      for (int l = 0; l < c; ++l)
        xdot += (*D)(j, l + 1) *
                X.segment(l * nx, nx).cwiseProduct(res->state_scale);
      xdot /= h;
      const double u = X[c * nx + j] * res->control_scale;
      res->residual(node_t[j], xj, xdot, u, r);
      for (int i = 0; i < nd; ++i)
        out[j * (nd + na) + i] = r[i] * res->residual_scale[i] * h;
      for (int i = 0; i < na; ++i)
        out[j * (nd + na) + nd + i] = r[nd + i] * res->residual_scale[nd + i];
    }
    return out;
  }
};

Eigen::VectorXd pack_element(const Eigen::MatrixXd& states,
                             const Eigen::VectorXd& controls,
                             const DaeResidual& res) {
  const int nx = static_cast<int>(states.rows());
  const int c = static_cast<int>(states.cols());
  Eigen::VectorXd X(c * (nx + 1));
  for (int j = 0; j < c; ++j)
    X.segment(j * nx, nx) = states.col(j).cwiseQuotient(res.state_scale);
  for (int j = 0; j < c; ++j)
    X[c * nx + j] = controls[j] / res.control_scale;
  return X;
}

void unpack_element(const Eigen::VectorXd& X, const DaeResidual& res, int c,
                    Eigen::MatrixXd& states, Eigen::VectorXd& controls) {
  const int nx = res.n_diff;
  states.resize(nx, c);
  controls.resize(c);
  for (int j = 0; j < c; ++j)
    states.col(j) = X.segment(j * nx, nx).cwiseProduct(res.state_scale);
  for (int j = 0; j < c; ++j) controls[j] = X[c * nx + j] * res.control_scale;
}

}  // namespace

CollocationSolution solve_segment(const DaeResidual& res,
                                  const Eigen::VectorXd& state0, double tb0,
                                  const CollocationMesh& mesh, double tol) {
  if (res.n_alg != 1)
    throw structural_error("solve_segment expects one algebraic unknown");
  if (state0.size() != res.n_diff)
    throw std::invalid_argument("state0 size mismatch");
  if (res.state_scale.size() != res.n_diff ||
      res.residual_scale.size() != res.n_diff + res.n_alg)
    throw std::invalid_argument("residual scales not set");

  const int c = mesh.points;
  const int nx = res.n_diff;
  const auto& tau = radau_nodes(c);
  std::vector<double> pts(tau.size() + 1, 0.0);
  std::copy(tau.begin(), tau.end(), pts.begin() + 1);
  const Eigen::MatrixXd D = lagrange_diff_matrix(pts);

  CollocationSolution sol;
  sol.mesh = mesh;
  sol.nx = nx;
  sol.x0 = state0;
  sol.tb0 = tb0;

  NewtonWorkspace ws;
  Eigen::VectorXd x_start = state0;
  double u_prev = tb0;

  for (int k = 0; k < mesh.elements(); ++k) {
    const double ta = mesh.bounds[k], tb = mesh.bounds[k + 1];
    ElementSystem sys;
    sys.res = &res;
    sys.D = &D;
    sys.h = tb - ta;
    sys.x_start = x_start;
    sys.c = c;
    sys.nx = nx;
    sys.node_t.resize(c);
    for (int j = 0; j < c; ++j) sys.node_t[j] = ta + sys.h * tau[j];

    // Constant extrapolation of the element start as the initial iterate.
    Eigen::MatrixXd st0 = x_start.replicate(1, c);
    Eigen::VectorXd ct0 = Eigen::VectorXd::Constant(c, u_prev);
    Eigen::VectorXd X0 = pack_element(st0, ct0, res);

    NewtonResult nr = ws.solve(sys, X0, tol, 50, true);
    if (!nr.converged) {
      ws.invalidate();
      nr = ws.solve(sys, X0, tol, 50, false);
    }
    if (!nr.converged && sys.h > 0) {
      // Continuation: solve a 2x coarser element spanning this one and use
      // its polynomial as the initial iterate.
      const double wide = std::min(2.0 * sys.h, mesh.t1() - ta);
      if (wide > 1.5 * sys.h) {
        ElementSystem coarse = sys;
        coarse.h = wide;
        for (int j = 0; j < c; ++j) coarse.node_t[j] = ta + wide * tau[j];
        NewtonWorkspace ws2;
        NewtonResult cr = ws2.solve(coarse, X0, std::max(tol, 1e-8), 80, false);
        if (cr.converged) {
          Eigen::MatrixXd cst;
          Eigen::VectorXd cct;
          unpack_element(cr.x, res, c, cst, cct);
          Eigen::MatrixXd sv(nx, c + 1);
          sv.col(0) = x_start;
          sv.rightCols(c) = cst;
          Eigen::MatrixXd cv(1, c);
          cv.row(0) = cct.transpose();
          Eigen::MatrixXd st1(nx, c);
          Eigen::VectorXd ct1(c);
          for (int j = 0; j < c; ++j) {
            const double s = sys.h * tau[j] / wide;
            st1.col(j) = lagrange_eval(pts, sv, s);
            ct1[j] = lagrange_eval(tau, cv, s)[0];
          }
          ws.invalidate();
          nr = ws.solve(sys, pack_element(st1, ct1, res), tol, 50, false);
        }
      }
    }
    if (!nr.converged)
      throw segment_error("collocation element " + std::to_string(k) + " at [" +
                              std::to_string(ta) + ", " + std::to_string(tb) +
                              "] s did not converge (residual " +
                              std::to_string(nr.residual_norm) + ")",
                          nr.residual_norm);

    sol.newton_iters += nr.iterations;
    sol.max_residual = std::max(sol.max_residual, nr.residual_norm);
    Eigen::MatrixXd st;
    Eigen::VectorXd ct;
    unpack_element(nr.x, res, c, st, ct);
    sol.states.push_back(st);
    sol.controls.push_back(ct);
    x_start = st.col(c - 1);
    u_prev = ct[c - 1];
  }
  return sol;
}

}  // namespace lyodry
