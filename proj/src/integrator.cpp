#include "integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace lyodry {

namespace {

// TR-BDF2 constants, gamma = 2 - sqrt(2). Both stages share the iteration
// matrix I - (gamma/2) h J.
constexpr double kGamma = 0.5857864376269049;
constexpr double kD = kGamma / 2.0;
constexpr double kC1 = 1.2071067811865475;   // 1 / (gamma (2 - gamma))
constexpr double kC0 = 0.2071067811865475;   // (1-gamma)^2 / (gamma (2-gamma))
constexpr double kErr2C3 = -0.08088022903977894;  // twice the error constant

double wrms(const Eigen::VectorXd& v, const Eigen::VectorXd& ya,
            const Eigen::VectorXd& yb, double rtol, double atol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double w = atol + rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
    double q = v[i] / w;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

Eigen::VectorXd hermite(double t, double ta, const Eigen::VectorXd& ya,
                        const Eigen::VectorXd& fa, double tb,
                        const Eigen::VectorXd& yb, const Eigen::VectorXd& fb) {
  const double h = tb - ta;
  const double s = (t - ta) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * ya + (s3 - 2 * s2 + s) * h * fa +
         (-2 * s3 + 3 * s2) * yb + (s3 - s2) * h * fb;
}

struct FdScale {
  static double delta(double yj, double ymax) {
    return 1e-8 * std::max(std::abs(yj), 1e-6 * std::max(1.0, ymax));
  }
};

Eigen::MatrixXd fd_jacobian(const RhsFn& f, double t, const Eigen::VectorXd& y,
                            double u, const Eigen::VectorXd& f0,
                            const JacobianPattern* pattern,
                            IntegrationStats& stats) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  const double ymax = y.cwiseAbs().maxCoeff();
  Eigen::VectorXd yp = y, fp(n);

  if (pattern != nullptr && pattern->dim == n) {
    for (const auto& group : fd_groups(*pattern)) {
      yp = y;
      for (int j : group) yp[j] += FdScale::delta(y[j], ymax);
      f(t, yp, u, fp);
      ++stats.rhs_evals;
      const bool border =
          group.size() == 1 &&
          std::find(pattern->border_cols.begin(), pattern->border_cols.end(),
                    group[0]) != pattern->border_cols.end();
      for (int j : group) {
        const double dj = FdScale::delta(y[j], ymax);
        const int lo = border ? 0 : std::max(0, j - 1);
        const int hi = border ? n - 1 : std::min(n - 1, j + 1);
        for (int i = lo; i <= hi; ++i) J(i, j) = (fp[i] - f0[i]) / dj;
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      yp = y;
      const double dj = FdScale::delta(y[j], ymax);
      yp[j] += dj;
      f(t, yp, u, fp);
      ++stats.rhs_evals;
      J.col(j) = (fp - f0) / dj;
    }
  }
  return J;
}

struct StageResult {
  bool converged = false;
  Eigen::VectorXd z;
  Eigen::VectorXd fz;
};

}  // namespace

Eigen::VectorXd Trajectory::eval(double t) const {
  if (samples.empty()) throw std::out_of_range("empty trajectory");
  if (t < samples.front().t - 1e-12 || t > samples.back().t + 1e-12)
    throw std::out_of_range("dense evaluation outside trajectory span");
  t = std::clamp(t, samples.front().t, samples.back().t);
  if (samples.size() == 1) return samples.front().y;
  auto it = std::lower_bound(
      samples.begin(), samples.end(), t,
      [](const TrajectorySample& s, double v) { return s.t < v; });
  if (it == samples.begin()) ++it;
  if (it == samples.end()) --it;
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (t == a.t) return a.y;
  if (t == b.t) return b.y;
  return hermite(t, a.t, a.y, a.ydot, b.t, b.y, b.ydot);
}

double Trajectory::eval_control(double t) const {
  if (samples.empty()) throw std::out_of_range("empty trajectory");
  t = std::clamp(t, samples.front().t, samples.back().t);
  if (samples.size() == 1) return samples.front().u;
  auto it = std::lower_bound(
      samples.begin(), samples.end(), t,
      [](const TrajectorySample& s, double v) { return s.t < v; });
  if (it == samples.begin()) ++it;
  if (it == samples.end()) --it;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double s = (t - a.t) / (b.t - a.t);
  return (1.0 - s) * a.u + s * b.u;
}

void Trajectory::append(const Trajectory& tail) {
  for (const auto& s : tail.samples) {
    if (!samples.empty() && s.t <= samples.back().t) continue;
    samples.push_back(s);
  }
}

IntegrationResult integrate(const RhsFn& f, const ControlFn& control,
                            const Eigen::VectorXd& y0, double t0, double t_end,
                            const std::vector<EventFunction>& events,
                            const IntegrationOptions& opts,
                            const JacobianPattern* pattern,
                            const std::vector<double>& break_times) {
  if (t_end < t0) throw std::invalid_argument("integrate: t_end < t0");
  IntegrationResult res;
  IntegrationStats& st = res.stats;
  const int n = static_cast<int>(y0.size());
  const double span = t_end - t0;

  double t = t0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd f0(n);
  f(t, y, control(t), f0);
  ++st.rhs_evals;
  res.trajectory.samples.push_back({t, y, f0, control(t)});
  if (span == 0.0) return res;

  // Stop points: break times inside the span, then t_end.
  std::vector<double> stops;
  for (double b : break_times)
    if (b > t0 + 1e-12 * std::max(1.0, std::abs(t0)) && b < t_end) stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.push_back(t_end);
  std::size_t stop_idx = 0;

  // Event bookkeeping: previous values and arming state. An event starting
  // at or past its manifold (within arm_margin) is disarmed until the
  // trajectory recedes.
  auto init_armed = [](const EventFunction& e, double g) {
    bool near;
    if (e.direction > 0) near = g >= -e.arm_margin;
    else if (e.direction < 0) near = g <= e.arm_margin;
    else near = std::abs(g) <= e.arm_margin;
    return !near;
  };
  std::vector<double> g_prev(events.size());
  std::vector<bool> armed(events.size());
  std::vector<bool> started(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    g_prev[k] = e.g(t, y, control(t));
    started[k] = t >= e.active_from;
    armed[k] = started[k] && init_armed(e, g_prev[k]);
  }

  // Initial step.
  double h;
  if (opts.initial_step > 0.0) {
    h = opts.initial_step;
  } else {
    double d0 = wrms(y, y, y, opts.rtol, opts.atol);
    double d1 = wrms(f0, y, y, opts.rtol, opts.atol);
    h = d1 > 1e-14 ? 0.01 * std::max(d0, 1e-6) / d1 : 1e-6 * span;
    h = std::max(h, 1e-8 * span);
  }
  h = std::min({h, opts.max_step, span});

  const double hmin = 1e-13 * std::max({std::abs(t0), std::abs(t_end), 1.0});
  Eigen::MatrixXd J;
  bool jac_fresh = false;
  bool have_jac = false;
  StructuredSolver W;
  double err_prev = 1.0;
  int consecutive_failures = 0;

  // Control lookup for stage times: a stage landing exactly on a stop point
  // takes the left limit so a discontinuous control does not leak backward.
  auto stage_control = [&](double ts, double stop) {
    if (ts >= stop) return control(stop - 1e-9 * std::max(1.0, std::abs(stop)));
    return control(ts);
  };

  // Stage iterates can leave the physical domain (negative temperatures,
  // interface past H); a throwing right-hand side counts as a convergence
  // failure and shrinks the step.
  auto newton_stage = [&](double ts, double us, const Eigen::VectorXd& psi,
                          const Eigen::VectorXd& guess,
                          double hd) -> StageResult {
    StageResult out;
    out.z = guess;
    Eigen::VectorXd F(n), fz(n), delta(n);
    double prev_norm = -1.0;
    try {
      for (int it = 0; it < 8; ++it) {
        f(ts, out.z, us, fz);
        ++st.rhs_evals;
        F = out.z - hd * fz - psi;
        delta = W.solve(F);
        out.z -= delta;
        ++st.newton_iters;
        double dn = wrms(delta, y, out.z, opts.rtol, opts.atol);
        if (dn <= 0.03) {
          f(ts, out.z, us, out.fz);
          ++st.rhs_evals;
          out.converged = true;
          return out;
        }
        if (prev_norm > 0.0 && dn > 1.5 * prev_norm) return out;
        prev_norm = dn;
      }
    } catch (const std::domain_error&) {
      out.converged = false;
    }
    return out;
  };

  const double t_eps = 1e-12 * std::max(1.0, std::max(std::abs(t0), std::abs(t_end)));
  while (t_end - t > t_eps) {
    if (++st.steps > opts.max_steps)
      throw integration_error("integrate: step budget exhausted", t);

    const double stop = stops[stop_idx];
    double remaining = stop - t;
    if (h >= remaining * 0.95) h = remaining;
    h = std::min(h, opts.max_step);
    if (h < hmin)
      throw integration_error("integrate: step size underflow", t);

    if (!have_jac) {
      J = fd_jacobian(f, t, y, control(t), f0, pattern, st);
      ++st.jacobians;
      have_jac = true;
      jac_fresh = true;
    }
    Eigen::MatrixXd Wm = Eigen::MatrixXd::Identity(n, n) - (kD * h) * J;
    W.factor(Wm, pattern);

    const double tg = t + kGamma * h;
    const double t1 = t + h;
    const double ug = stage_control(tg, stop);
    const double u1 = stage_control(t1, stop);

    // Trapezoidal stage to t + gamma h.
    Eigen::VectorXd psi1 = y + kD * h * f0;
    StageResult s1 = newton_stage(tg, ug, psi1, y + kGamma * h * f0, kD * h);
    StageResult s2;
    if (s1.converged) {
      // BDF2-like stage to t + h.
      Eigen::VectorXd psi2 = kC1 * s1.z - kC0 * y;
      Eigen::VectorXd guess = y + (s1.z - y) / kGamma;
      s2 = newton_stage(t1, u1, psi2, guess, kD * h);
    }

    if (!s1.converged || !s2.converged) {
      if (++consecutive_failures > 40)
        throw integration_error("integrate: repeated Newton failures", t);
      if (!jac_fresh) {
        have_jac = false;  // refresh at current point and retry
      } else {
        h *= 0.25;
      }
      continue;
    }

    // Local error estimate from the three stage derivatives, filtered
    // through the iteration matrix for stiff robustness.
    Eigen::VectorXd est =
        kErr2C3 * h *
        ((s2.fz - s1.fz) / (1.0 - kGamma) - (s1.fz - f0) / kGamma);
    Eigen::VectorXd est_f = W.solve(est);
    double err = wrms(est_f, y, s2.z, opts.rtol, opts.atol);

    if (err > 1.0) {
      ++st.rejected;
      if (++consecutive_failures > 40)
        throw integration_error("integrate: repeated step rejections", t);
      double fac = std::max(0.2, 0.9 * std::pow(err, -1.0 / 3.0));
      h *= fac;
      jac_fresh = false;
      continue;
    }

    // Accept.
    consecutive_failures = 0;
    ++st.accepted;
    const double t_new = t1;
    Eigen::VectorXd y_new = s2.z;
    Eigen::VectorXd f_new = s2.fz;

    // Event scan over [t, t_new] using local Hermite dense output and the
    // exact control function.
    std::optional<TriggeredEvent> hit;
    double hit_t = t_end + 1.0;
    bool hit_at_sample = false;
    const double u_new = control(t_new);
    const std::vector<bool> armed_pre = armed;
    const std::vector<bool> started_pre = started;
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& e = events[k];
      double g_new = e.g(t_new, y_new, u_new);
      if (!started[k]) {
        if (t_new >= e.active_from) {
          started[k] = true;
          armed[k] = init_armed(e, g_new);
          // A violation still standing when detection begins fires here.
          const bool violated = (e.direction > 0 && g_new > e.arm_margin) ||
                                (e.direction < 0 && g_new < -e.arm_margin);
          if (violated && t_new < hit_t) {
            hit_t = t_new;
            hit = TriggeredEvent{static_cast<int>(k), t_new, e.name};
            hit_at_sample = true;
          }
        }
        g_prev[k] = g_new;
        continue;
      }
      if (!armed[k]) {
        bool rearmed = false;
        if (e.direction > 0) rearmed = g_new <= -e.arm_margin;
        else if (e.direction < 0) rearmed = g_new >= e.arm_margin;
        else rearmed = std::abs(g_new) >= e.arm_margin;
        if (rearmed) armed[k] = true;
        g_prev[k] = g_new;
        continue;
      }
      bool crossed = false;
      if (e.direction >= 0 && g_prev[k] <= 0.0 && g_new > 0.0) crossed = true;
      if (e.direction <= 0 && g_prev[k] >= 0.0 && g_new < 0.0) crossed = true;
      if (crossed) {
        auto phi = [&](double tc) {
          Eigen::VectorXd yc = hermite(tc, t, y, f0, t_new, y_new, f_new);
          return e.g(tc, yc, control(tc));
        };
        double te;
        double ga = phi(t);
        if (ga == 0.0) {
          te = t;
        } else if ((ga > 0) == (g_new > 0)) {
          // Sign change at the sample but not bracketable on dense output.
          throw event_error("event '" + e.name +
                            "' not bracketable across step");
        } else {
          te = find_root_bracketed(phi, t, t_new, opts.event_tol);
        }
        if (te < hit_t) {
          hit_t = te;
          hit = TriggeredEvent{static_cast<int>(k), te, e.name};
          hit_at_sample = false;
        }
      }
      g_prev[k] = g_new;
    }

    if (hit && hit_at_sample) {
      // Gate-expiry firing: the event time is the sample itself.
      res.trajectory.samples.push_back({t_new, y_new, f_new, u_new});
      res.event = hit;
      return res;
    }
    if (hit) {
      // Hermite localization is limited by the interpolation error of this
      // step; when the step dwarfs event_tol, re-integrate it with a small
      // step cap so the root is found against a resolved trajectory.
      if (t_new - t > 16.0 * opts.event_tol) {
        std::vector<EventFunction> sub_events = events;
        for (std::size_t k = 0; k < events.size(); ++k) {
          if (!started_pre[k] || !armed_pre[k]) {
            sub_events[k].g = [](double, const Eigen::VectorXd&, double) {
              return -1.0;
            };
          }
          sub_events[k].arm_margin = 0.0;
          sub_events[k].active_from =
              -std::numeric_limits<double>::infinity();
        }
        IntegrationOptions sub = opts;
        sub.max_step = std::max((t_new - t) / 24.0, 2.0 * opts.event_tol);
        sub.initial_step = sub.max_step;
        IntegrationResult fine =
            integrate(f, control, y, t, t_new, sub_events, sub, pattern, {});
        st.steps += fine.stats.steps;
        st.accepted += fine.stats.accepted;
        st.rejected += fine.stats.rejected;
        st.rhs_evals += fine.stats.rhs_evals;
        st.jacobians += fine.stats.jacobians;
        st.newton_iters += fine.stats.newton_iters;
        if (fine.event) {
          for (std::size_t i = 1; i < fine.trajectory.samples.size(); ++i)
            res.trajectory.samples.push_back(fine.trajectory.samples[i]);
          res.event = fine.event;
          return res;
        }
        // The refined pass saw no crossing (interpolation artifact): drop it.
        hit.reset();
      } else {
        Eigen::VectorXd ye = hermite(hit_t, t, y, f0, t_new, y_new, f_new);
        Eigen::VectorXd fe(n);
        const double ue = control(hit_t);
        f(hit_t, ye, ue, fe);
        ++st.rhs_evals;
        res.trajectory.samples.push_back({hit_t, ye, fe, ue});
        res.event = hit;
        return res;
      }
    }

    res.trajectory.samples.push_back({t_new, y_new, f_new, u_new});
    t = t_new;
    y = y_new;
    f0 = f_new;
    jac_fresh = false;
    if (stop - t <= t_eps && stop_idx + 1 < stops.size()) {
      ++stop_idx;
      // Control may jump at a stop point; refresh the cached derivative.
      f(t, y, control(t), f0);
      ++st.rhs_evals;
      have_jac = false;
    }

    double fac = err > 0.0
                     ? 0.9 * std::pow(err, -0.7 / 3.0) * std::pow(err_prev, 0.4 / 3.0)
                     : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    h = std::min(h * fac, opts.max_step);
    err_prev = std::max(err, 1e-10);
  }

  return res;
}

}  // namespace lyodry
