#pragma once

#include <optional>

#include "controller.hpp"

namespace lyodry {

// Piecewise-constant shelf-temperature profile on N uniform intervals over a
// trial horizon (the horizon itself is a decision variable for minimum-time
// problems).
struct CvpControl {
  double t_start = 0.0;
  double horizon = 0.0;
  Eigen::VectorXd values;

  int intervals() const { return static_cast<int>(values.size()); }
  double value_at(double t) const;
  std::vector<double> boundaries() const;
};

struct FixedControlResult {
  std::optional<double> t_f;  // drying time; empty when S never reaches H
  double violation = 0.0;     // integral of positive path-constraint residuals
                              // (K s for temperature, relative for velocity)
  double terminal_S = 0.0;
  Trajectory trajectory;
};

// Integrates the model under the given control until drying completes or the
// trial horizon ends.
FixedControlResult simulate_fixed_control(const CvpControl& control,
                                          const Scenario& sc);

struct CvpReport {
  CvpControl control;
  std::optional<double> t_f;
  long evaluations = 0;
  double wall_s = 0.0;
  double violation = 0.0;
  double objective = 0.0;
};

// Direct-method reference: pattern search over interval values and horizon,
// penalized objective t_f + 1e6 * violation (+ completion penalty), three
// restart seeds (all-max, all-mid, reference solution resampled). Throws
// infeasibility_error when no feasible point is found within the budget.
CvpReport optimize_cvp(const Scenario& sc, int n_intervals,
                       const Solution* reference, long budget = 5000);

}  // namespace lyodry
