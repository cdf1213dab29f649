#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace lyodry {

struct IntegrationOptions {
  double rtol = 1e-6;
  double atol = 1e-8;
  double max_step = 900.0;      // s
  double initial_step = 0.0;    // s; 0 = choose automatically
  double event_tol = 1e-3;      // s, event-time localization tolerance
  long max_steps = 2000000;
};

// Right-hand side f(t, y, u) -> dy and the control input u(t).
using RhsFn =
    std::function<void(double t, const Eigen::VectorXd& y, double u,
                       Eigen::VectorXd& dy)>;
using ControlFn = std::function<double(double t)>;

struct TrajectorySample {
  double t;
  Eigen::VectorXd y;
  Eigen::VectorXd ydot;
  double u;
};

// Accepted-step samples with cubic-Hermite dense output between them.
class Trajectory {
public:
  std::vector<TrajectorySample> samples;

  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }

  // Interpolated state at t (throws std::out_of_range outside the span).
  Eigen::VectorXd eval(double t) const;
  // Linear interpolation of the stored control channel.
  double eval_control(double t) const;

  void append(const Trajectory& tail);
};

// Scalar event g(t, y, u); fires when g crosses zero in the requested
// direction. An event starting within arm_margin of its manifold stays
// disarmed until the trajectory has receded past the margin. Crossings before
// active_from are ignored; the arming state is (re)initialized at the first
// sample past it.
struct EventFunction {
  std::function<double(double t, const Eigen::VectorXd& y, double u)> g;
  int direction = +1;  // +1 rising, -1 falling, 0 both
  bool terminal = false;
  double arm_margin = 0.0;
  double active_from = -std::numeric_limits<double>::infinity();
  std::string name;
};

struct TriggeredEvent {
  int index;
  double t;
  std::string name;
};

struct IntegrationStats {
  long steps = 0;
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  long jacobians = 0;
  long newton_iters = 0;
};

struct IntegrationResult {
  Trajectory trajectory;
  std::optional<TriggeredEvent> event;
  IntegrationStats stats;
};

// Adaptive TR-BDF2 (L-stable, order 2) with modified Newton stages and dense
// event localization. `pattern`, when given, routes the stage solves through
// the structured band+border solver. `break_times` are stepped onto exactly
// (control discontinuities).
IntegrationResult integrate(const RhsFn& f, const ControlFn& control,
                            const Eigen::VectorXd& y0, double t0, double t_end,
                            const std::vector<EventFunction>& events,
                            const IntegrationOptions& opts,
                            const JacobianPattern* pattern = nullptr,
                            const std::vector<double>& break_times = {});

}  // namespace lyodry
