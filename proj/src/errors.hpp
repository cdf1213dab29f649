#pragma once

#include <stdexcept>
#include <string>

namespace lyodry {

// Bad configuration input: unknown key, missing field, invariant violation.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class solver_error : public std::runtime_error {
public:
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Adaptive integration gave up (step-size underflow, Newton failure).
class integration_error : public solver_error {
public:
  integration_error(const std::string& msg, double t_last)
      : solver_error(msg), t_last(t_last) {}
  double t_last;
};

// Event sign change with no bracketable root across a step.
class event_error : public solver_error {
public:
  using solver_error::solver_error;
};

// Collocation element did not converge after all retries.
class segment_error : public solver_error {
public:
  segment_error(const std::string& msg, double best_residual)
      : solver_error(msg), best_residual(best_residual) {}
  double best_residual;
};

// Singular collocation system: index/constraint mismatch.
class structural_error : public solver_error {
public:
  using solver_error::solver_error;
};

// Replay drifted away from the collocation states.
class consistency_error : public solver_error {
public:
  using solver_error::solver_error;
};

class chattering_error : public solver_error {
public:
  using solver_error::solver_error;
};

// Scalar control solve found no sign change in its bracket.
class infeasibility_error : public solver_error {
public:
  using solver_error::solver_error;
};

}  // namespace lyodry
