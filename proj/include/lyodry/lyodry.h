/*
 * lyodry - optimal shelf-temperature trajectories for lyophilization
 * primary drying, computed by simulating a hybrid system of mixed-index
 * DAEs (policy switching on detected events) instead of running a
 * numerical optimizer.
 *
 * C API: opaque handles, integer status codes, accessor functions. All
 * functions returning lyo_status set a thread-local message retrievable
 * with lyo_last_error() on failure.
 */
#ifndef LYODRY_H
#define LYODRY_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lyo_status {
  LYO_OK = 0,
  LYO_ERR_CONFIG = 2,     /* bad configuration / unknown key */
  LYO_ERR_SOLVER = 3,     /* integration or collocation failure */
  LYO_ERR_INCOMPLETE = 4, /* horizon reached before drying completed */
  LYO_ERR_INVALID = 5,    /* bad argument */
  LYO_ERR_RANGE = 6       /* index or time out of range */
} lyo_status;

typedef struct lyo_scenario lyo_scenario;
typedef struct lyo_solution lyo_solution;

const char* lyo_version(void);
const char* lyo_last_error(void);

/* ---- scenario construction -------------------------------------------- */

/* name: "problem1", "problem2" or "custom" (library defaults, no limits). */
lyo_status lyo_scenario_builtin(const char* name, lyo_scenario** out);
lyo_status lyo_scenario_from_file(const char* path, lyo_scenario** out);
lyo_status lyo_scenario_from_string(const char* text, lyo_scenario** out);
/* Single key = value override; same keys as the configuration file. */
lyo_status lyo_scenario_set(lyo_scenario* sc, const char* key,
                            const char* value);
/* Effective configuration text; free with lyo_string_free. */
lyo_status lyo_scenario_dump(const lyo_scenario* sc, char** out_text);
int lyo_scenario_grid_points(const lyo_scenario* sc);
const char* lyo_scenario_name(const lyo_scenario* sc);
void lyo_scenario_free(lyo_scenario* sc);
void lyo_string_free(char* s);

/* ---- simulation -------------------------------------------------------- */

/* Runs the hybrid controller. On LYO_ERR_INCOMPLETE a partial solution is
 * still returned. The caller owns *out. */
lyo_status lyo_simulate(const lyo_scenario* sc, lyo_solution** out);

/* policy codes: 0 none, 1..3 = policy1..policy3 */
const char* lyo_policy_name(int policy);

enum {
  LYO_TRIGGER_TEMPERATURE_LIMIT = 0,
  LYO_TRIGGER_VELOCITY_LIMIT = 1,
  LYO_TRIGGER_CONTROL_UPPER_BOUND = 2,
  LYO_TRIGGER_CONTROL_LOWER_BOUND = 3,
  LYO_TRIGGER_TERMINATION = 4
};
const char* lyo_trigger_name(int trigger);

size_t lyo_solution_sample_count(const lyo_solution* sol);
/* temps must hold lyo_scenario_grid_points() doubles; any output pointer may
 * be NULL. */
lyo_status lyo_solution_sample(const lyo_solution* sol, size_t i, double* t,
                               double* temps, double* S, double* dSdt,
                               double* Tb, int* policy);
/* Dense evaluation anywhere inside the covered time span. */
lyo_status lyo_solution_eval(const lyo_solution* sol, double t, double* temps,
                             double* S, double* dSdt, double* Tb);

size_t lyo_solution_event_count(const lyo_solution* sol);
/* policy_before is 0 for a tracking policy picked at t0. */
lyo_status lyo_solution_event(const lyo_solution* sol, size_t i, double* t,
                              int* trigger, int* policy_before,
                              int* policy_after);

double lyo_solution_drying_time(const lyo_solution* sol);
int lyo_solution_complete(const lyo_solution* sol);

size_t lyo_solution_segment_count(const lyo_solution* sol);
/* solver: 0 adaptive integrator, 1 collocation. */
lyo_status lyo_solution_segment(const lyo_solution* sol, size_t i, int* policy,
                                int* solver, double* t_begin, double* t_end,
                                long* steps, long* newton_iters,
                                double* wall_s);
void lyo_solution_free(lyo_solution* sol);

/* ---- benchmark against the direct-method baseline ----------------------- */

typedef struct lyo_benchmark_report {
  double sim_t_f;        /* s */
  double sim_wall_s;
  double cvp_t_f;        /* s */
  double cvp_wall_s;
  double speedup;        /* cvp_wall_s / sim_wall_s */
  double cvp_violation;  /* integral path-constraint violation of the best
                            baseline point */
  long cvp_evaluations;
  int n_intervals;
} lyo_benchmark_report;

/* Runs the hybrid controller and the control-vector-parameterization
 * baseline on the same scenario. */
lyo_status lyo_benchmark(const lyo_scenario* sc, int n_intervals,
                         lyo_benchmark_report* out);

#ifdef __cplusplus
}
#endif

#endif /* LYODRY_H */
