#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace lyodry {

// Sparsity of a square Jacobian: tridiagonal band plus a few dense columns.
// Everything outside the band that is not in border_cols is assumed zero.
struct JacobianPattern {
  int dim = 0;
  std::vector<int> border_cols;
};

// Column groups for finite-difference Jacobian evaluation. Border columns get
// a group each; the remaining (tridiagonal) columns are split into 3 groups so
// that no two columns of a group touch the same row.
std::vector<std::vector<int>> fd_groups(const JacobianPattern& pat);

// Solver for W x = b where W follows a JacobianPattern. The band is factored
// by the Thomas algorithm and the border columns are folded back in with a
// Woodbury correction; if the band factorization hits a small pivot (or no
// pattern is given) a dense LU is used instead.
class StructuredSolver {
public:
  void factor(const Eigen::MatrixXd& W, const JacobianPattern* pat);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

private:
  bool dense_ = true;
  int dim_ = 0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  // Thomas factorization of the band (LU without pivoting).
  Eigen::VectorXd low_, diag_, up_;
  std::vector<int> cols_;
  Eigen::MatrixXd Z_;  // band^{-1} * border correction columns
  Eigen::PartialPivLU<Eigen::MatrixXd> cap_;  // capacitance matrix

  Eigen::VectorXd band_solve(const Eigen::VectorXd& b) const;
};

// Root of f on [lo, hi] with f(lo), f(hi) of opposite sign; bisection with a
// secant step where it helps. Throws infeasibility_error without a bracket.
double find_root_bracketed(const std::function<double(double)>& f, double lo,
                           double hi, double xtol, int max_iter = 200);

}  // namespace lyodry
