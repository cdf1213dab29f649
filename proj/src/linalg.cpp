#include "linalg.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace lyodry {

std::vector<std::vector<int>> fd_groups(const JacobianPattern& pat) {
  std::vector<std::vector<int>> groups;
  std::vector<bool> is_border(pat.dim, false);
  for (int c : pat.border_cols) {
    is_border[c] = true;
    groups.push_back({c});
  }
  std::vector<std::vector<int>> tri(3);
  for (int j = 0; j < pat.dim; ++j)
    if (!is_border[j]) tri[j % 3].push_back(j);
  for (auto& g : tri)
    if (!g.empty()) groups.push_back(std::move(g));
  return groups;
}

void StructuredSolver::factor(const Eigen::MatrixXd& W,
                              const JacobianPattern* pat) {
  dim_ = static_cast<int>(W.rows());
  if (pat == nullptr || pat->dim != dim_) {
    dense_ = true;
    lu_.compute(W);
    return;
  }

  const int n = dim_;
  cols_ = pat->border_cols;
  const int k = static_cast<int>(cols_.size());

  // Band part: W with border-column entries outside the band removed.
  low_.resize(n);
  diag_.resize(n);
  up_.resize(n);
  for (int i = 0; i < n; ++i) {
    diag_[i] = W(i, i);
    low_[i] = i > 0 ? W(i, i - 1) : 0.0;
    up_[i] = i + 1 < n ? W(i, i + 1) : 0.0;
  }

  // LU of the band without pivoting; bail out to dense on small pivots.
  const double tiny = 1e-13 * W.cwiseAbs().maxCoeff() + 1e-300;
  bool ok = true;
  for (int i = 1; i < n && ok; ++i) {
    if (std::abs(diag_[i - 1]) < tiny) ok = false;
    low_[i] /= diag_[i - 1];
    diag_[i] -= low_[i] * up_[i - 1];
  }
  if (ok && std::abs(diag_[n - 1]) < tiny) ok = false;
  if (!ok) {
    dense_ = true;
    lu_.compute(W);
    return;
  }

  // Correction columns u_c: border entries outside the band.
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, k);
  for (int c = 0; c < k; ++c) {
    const int j = cols_[c];
    for (int i = 0; i < n; ++i)
      if (std::abs(i - j) > 1) U(i, c) = W(i, j);
  }

  Z_.resize(n, k);
  for (int c = 0; c < k; ++c) Z_.col(c) = band_solve(U.col(c));

  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) C(r, c) += Z_(cols_[r], c);
  cap_.compute(C);
  if (std::abs(cap_.determinant()) < 1e-14) {
    dense_ = true;
    lu_.compute(W);
    return;
  }
  dense_ = false;
}

Eigen::VectorXd StructuredSolver::band_solve(const Eigen::VectorXd& b) const {
  const int n = dim_;
  Eigen::VectorXd x = b;
  for (int i = 1; i < n; ++i) x[i] -= low_[i] * x[i - 1];
  x[n - 1] /= diag_[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (x[i] - up_[i] * x[i + 1]) / diag_[i];
  return x;
}

Eigen::VectorXd StructuredSolver::solve(const Eigen::VectorXd& b) const {
  if (dense_) return lu_.solve(b);
  Eigen::VectorXd y = band_solve(b);
  const int k = static_cast<int>(cols_.size());
  Eigen::VectorXd v(k);
  for (int c = 0; c < k; ++c) v[c] = y[cols_[c]];
  Eigen::VectorXd w = cap_.solve(v);
  return y - Z_ * w;
}

double find_root_bracketed(const std::function<double(double)>& f, double lo,
                           double hi, double xtol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw infeasibility_error("no sign change in root bracket");

  double a = lo, b = hi, fa = flo, fb = fhi;
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= xtol) break;
    // Secant candidate, kept only if it lands safely inside the bracket.
    double m = 0.5 * (a + b);
    double x = m;
    if (fb != fa) {
      double s = b - fb * (b - a) / (fb - fa);
      double margin = 0.01 * (b - a);
      if (s > a + margin && s < b - margin) x = s;
    }
    double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == (fa > 0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace lyodry
