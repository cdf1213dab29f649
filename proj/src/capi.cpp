#include "lyodry/lyodry.h"

#include <chrono>
#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "baseline.hpp"
#include "config.hpp"
#include "controller.hpp"
#include "errors.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
lyo_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const lyodry::config_error& e) {
    set_error(e.what());
    return LYO_ERR_CONFIG;
  } catch (const lyodry::solver_error& e) {
    set_error(e.what());
    return LYO_ERR_SOLVER;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return LYO_ERR_INVALID;
  } catch (const std::out_of_range& e) {
    set_error(e.what());
    return LYO_ERR_RANGE;
  } catch (const std::exception& e) {
    set_error(e.what());
    return LYO_ERR_SOLVER;
  }
}

}  // namespace

struct lyo_scenario {
  lyodry::Scenario sc;
};

struct lyo_solution {
  lyodry::Solution sol;
  lyodry::ModelParams params;
};

extern "C" {

const char* lyo_version(void) { return "1.0.0"; }

const char* lyo_last_error(void) { return g_last_error.c_str(); }

lyo_status lyo_scenario_builtin(const char* name, lyo_scenario** out) {
  if (!name || !out) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    auto* h = new lyo_scenario{lyodry::builtin_scenario(name)};
    *out = h;
    return LYO_OK;
  });
}

lyo_status lyo_scenario_from_file(const char* path, lyo_scenario** out) {
  if (!path || !out) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    auto* h = new lyo_scenario{lyodry::load_config_file(path)};
    *out = h;
    return LYO_OK;
  });
}

lyo_status lyo_scenario_from_string(const char* text, lyo_scenario** out) {
  if (!text || !out) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    auto* h = new lyo_scenario{lyodry::load_config_text(text)};
    *out = h;
    return LYO_OK;
  });
}

lyo_status lyo_scenario_set(lyo_scenario* sc, const char* key,
                            const char* value) {
  if (!sc || !key || !value) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    lyodry::apply_override(sc->sc, key, value);
    return LYO_OK;
  });
}

lyo_status lyo_scenario_dump(const lyo_scenario* sc, char** out_text) {
  if (!sc || !out_text) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    const std::string text = lyodry::dump_config(sc->sc);
    char* buf = static_cast<char*>(::operator new(text.size() + 1));
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_text = buf;
    return LYO_OK;
  });
}

int lyo_scenario_grid_points(const lyo_scenario* sc) {
  return sc ? sc->sc.params.n : 0;
}

const char* lyo_scenario_name(const lyo_scenario* sc) {
  return sc ? sc->sc.name.c_str() : "";
}

void lyo_scenario_free(lyo_scenario* sc) { delete sc; }

void lyo_string_free(char* s) { ::operator delete(s); }

lyo_status lyo_simulate(const lyo_scenario* sc, lyo_solution** out) {
  if (!sc || !out) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  *out = nullptr;
  try {
    auto* h = new lyo_solution{lyodry::run(sc->sc), sc->sc.params};
    *out = h;
    return LYO_OK;
  } catch (lyodry::incomplete_drying& e) {
    set_error(e.what());
    *out = new lyo_solution{std::move(e.partial), sc->sc.params};
    return LYO_ERR_INCOMPLETE;
  } catch (const lyodry::config_error& e) {
    set_error(e.what());
    return LYO_ERR_CONFIG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return LYO_ERR_SOLVER;
  }
}

const char* lyo_policy_name(int policy) {
  switch (policy) {
    case 0: return "none";
    case 1: return "policy1";
    case 2: return "policy2";
    case 3: return "policy3";
    default: return "?";
  }
}

const char* lyo_trigger_name(int trigger) {
  switch (trigger) {
    case LYO_TRIGGER_TEMPERATURE_LIMIT: return "temperature-limit";
    case LYO_TRIGGER_VELOCITY_LIMIT: return "velocity-limit";
    case LYO_TRIGGER_CONTROL_UPPER_BOUND: return "control-upper-bound";
    case LYO_TRIGGER_CONTROL_LOWER_BOUND: return "control-lower-bound";
    case LYO_TRIGGER_TERMINATION: return "termination";
    default: return "?";
  }
}

size_t lyo_solution_sample_count(const lyo_solution* sol) {
  return sol ? sol->sol.trajectory.samples.size() : 0;
}

lyo_status lyo_solution_sample(const lyo_solution* sol, size_t i, double* t,
                               double* temps, double* S, double* dSdt,
                               double* Tb, int* policy) {
  if (!sol) {
    set_error("null solution");
    return LYO_ERR_INVALID;
  }
  if (i >= sol->sol.trajectory.samples.size()) {
    set_error("sample index out of range");
    return LYO_ERR_RANGE;
  }
  const auto& s = sol->sol.trajectory.samples[i];
  const int n = sol->params.n;
  if (t) *t = s.t;
  if (temps)
    for (int k = 0; k < n; ++k) temps[k] = s.y[k];
  if (S) *S = s.y[n];
  if (dSdt)
    *dSdt = lyodry::interface_velocity(s.y[0], s.y[n], sol->params);
  if (Tb) *Tb = s.u;
  if (policy) *policy = sol->sol.sample_policy[i];
  return LYO_OK;
}

lyo_status lyo_solution_eval(const lyo_solution* sol, double t, double* temps,
                             double* S, double* dSdt, double* Tb) {
  if (!sol) {
    set_error("null solution");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    const Eigen::VectorXd y = sol->sol.trajectory.eval(t);
    const int n = sol->params.n;
    if (temps)
      for (int k = 0; k < n; ++k) temps[k] = y[k];
    if (S) *S = y[n];
    if (dSdt) *dSdt = lyodry::interface_velocity(y[0], y[n], sol->params);
    if (Tb) *Tb = sol->sol.trajectory.eval_control(t);
    return LYO_OK;
  });
}

size_t lyo_solution_event_count(const lyo_solution* sol) {
  return sol ? sol->sol.events.size() : 0;
}

lyo_status lyo_solution_event(const lyo_solution* sol, size_t i, double* t,
                              int* trigger, int* policy_before,
                              int* policy_after) {
  if (!sol) {
    set_error("null solution");
    return LYO_ERR_INVALID;
  }
  if (i >= sol->sol.events.size()) {
    set_error("event index out of range");
    return LYO_ERR_RANGE;
  }
  const auto& e = sol->sol.events[i];
  if (t) *t = e.t;
  if (trigger) *trigger = static_cast<int>(e.trigger);
  if (policy_before)
    *policy_before = e.before ? static_cast<int>(*e.before) : 0;
  if (policy_after) *policy_after = static_cast<int>(e.after);
  return LYO_OK;
}

double lyo_solution_drying_time(const lyo_solution* sol) {
  return sol ? sol->sol.t_f : 0.0;
}

int lyo_solution_complete(const lyo_solution* sol) {
  return sol && sol->sol.complete ? 1 : 0;
}

size_t lyo_solution_segment_count(const lyo_solution* sol) {
  return sol ? sol->sol.segments.size() : 0;
}

lyo_status lyo_solution_segment(const lyo_solution* sol, size_t i, int* policy,
                                int* solver, double* t_begin, double* t_end,
                                long* steps, long* newton_iters,
                                double* wall_s) {
  if (!sol) {
    set_error("null solution");
    return LYO_ERR_INVALID;
  }
  if (i >= sol->sol.segments.size()) {
    set_error("segment index out of range");
    return LYO_ERR_RANGE;
  }
  const auto& g = sol->sol.segments[i];
  if (policy) *policy = static_cast<int>(g.policy);
  if (solver) *solver = g.solver == lyodry::SolverKind::collocation ? 1 : 0;
  if (t_begin) *t_begin = g.t_begin;
  if (t_end) *t_end = g.t_end;
  if (steps) *steps = g.steps;
  if (newton_iters) *newton_iters = g.newton_iters;
  if (wall_s) *wall_s = g.wall_s;
  return LYO_OK;
}

void lyo_solution_free(lyo_solution* sol) { delete sol; }

lyo_status lyo_benchmark(const lyo_scenario* sc, int n_intervals,
                         lyo_benchmark_report* out) {
  if (!sc || !out) {
    set_error("null argument");
    return LYO_ERR_INVALID;
  }
  return guarded([&] {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    lyodry::Solution sim = lyodry::run(sc->sc);
    const double sim_wall =
        std::chrono::duration<double>(Clock::now() - t0).count();
    lyodry::CvpReport cvp = lyodry::optimize_cvp(sc->sc, n_intervals, &sim);
    out->sim_t_f = sim.t_f;
    out->sim_wall_s = sim_wall;
    out->cvp_t_f = cvp.t_f.value_or(0.0);
    out->cvp_wall_s = cvp.wall_s;
    out->speedup = sim_wall > 0 ? cvp.wall_s / sim_wall : 0.0;
    out->cvp_violation = cvp.violation;
    out->cvp_evaluations = cvp.evaluations;
    out->n_intervals = n_intervals;
    return LYO_OK;
  });
}

}  // extern "C"
