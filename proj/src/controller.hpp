#pragma once

#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "integrator.hpp"
#include "policies.hpp"

namespace lyodry {

// Path limits; a tracking policy exists to ride its limit, so the policy
// setpoints equal these values.
struct Setpoints {
  std::optional<double> T_max;  // product temperature limit, K
  std::optional<double> v_max;  // interface velocity limit, m/s
};

struct Numerics {
  double rtol = 1e-6;
  double atol = 1e-8;
  double event_tol = 1e-3;       // s
  double max_step = 900.0;       // s
  double dt_element = 60.0;      // s, collocation element width
  int colloc_points = 3;
  double colloc_tol = 1e-10;     // scaled residual at collocation points
  double lookahead = 7200.0;     // s, event-blind collocation window
  double consistency_tol = 0.5;  // K, replay vs collocation at element ends
  unsigned seed = 12345;         // baseline search only
};

struct Scenario {
  ModelParams params;
  ControlBounds bounds;
  Setpoints limits;
  double horizon = 72.0 * 3600.0;  // s, safety stop
  Numerics num;
  std::string name = "custom";

  void validate() const;
  // Drying is declared complete at S = H (1 - 1e-5), clear of the moving
  // boundary metric singularity.
  double terminal_S() const { return params.H * (1.0 - 1e-5); }
};

enum class Trigger {
  temperature_limit,
  velocity_limit,
  control_upper_bound,
  control_lower_bound,
  termination
};
const char* trigger_name(Trigger t);

// Discrete trace of the hybrid execution. `before` is empty for a tracking
// policy picked at t0; for termination, after == before.
struct EventRecord {
  double t;
  Trigger trigger;
  std::optional<PolicyId> before;
  PolicyId after;
};

struct SegmentDiagnostics {
  PolicyId policy;
  SolverKind solver;
  double t_begin = 0.0;
  double t_end = 0.0;
  long steps = 0;  // accepted integrator steps / collocation elements
  long newton_iters = 0;
  double wall_s = 0.0;
};

struct Solution {
  Trajectory trajectory;           // replay-accurate states; control clamped
  std::vector<int> sample_policy;  // active PolicyId per sample
  std::vector<EventRecord> events;
  std::vector<SegmentDiagnostics> segments;
  double t_f = 0.0;
  bool complete = false;
};

class incomplete_drying : public solver_error {
public:
  explicit incomplete_drying(Solution s)
      : solver_error("horizon reached before drying completed"),
        partial(std::move(s)) {}
  Solution partial;
};

// Event residuals at a state; entries are absent when the corresponding limit
// is not part of the scenario or is masked for the active policy (a tracking
// policy rides its own limit).
struct EventResiduals {
  std::optional<double> temperature;
  std::optional<double> velocity;
  std::optional<double> control_upper;
  std::optional<double> control_lower;
  double terminal = 0.0;
};
EventResiduals event_functions(const ProductState& s, double Tb,
                               const Scenario& sc,
                               std::optional<PolicyId> active);

struct PolicyChoice {
  PolicyId id;
  double level = 0.0;  // policy-1 control law value
};
// Policy selection on a trigger (or none). Ties elsewhere are broken by
// priority temperature > velocity > control bounds.
PolicyChoice select_policy(std::optional<Trigger> trigger, const Scenario& sc);

// Re-integrates the model with the collocation control trajectory as input
// (index-1 once the control is specified), with full event detection. When
// fresh_entry is set, control-bound events only become active after the first
// element (the relaxation transient of an inconsistent start is not a policy
// signal). Throws consistency_error when the replayed states drift from the
// collocation states at element boundaries.
IntegrationResult replay_detect(const CollocationSolution& colsol,
                                const Eigen::VectorXd& state0, double t0,
                                const Scenario& sc, PolicyId active,
                                bool fresh_entry,
                                std::vector<Trigger>* triggers_out = nullptr);

// Full hybrid run: pick the policy, simulate, detect events, switch,
// terminate at S = H. Throws incomplete_drying (carrying the partial
// solution) if the horizon cap is reached first.
Solution run(const Scenario& sc);

}  // namespace lyodry
