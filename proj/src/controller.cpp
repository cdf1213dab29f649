#include "controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "errors.hpp"

namespace lyodry {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RhsFn capped_rhs(const ModelParams& p) {
  return [p](double, const Eigen::VectorXd& y, double u, Eigen::VectorXd& dy) {
    model_rhs_capped(p, y, u, dy);
  };
}

struct EventSet {
  std::vector<EventFunction> fns;
  std::vector<Trigger> triggers;
};

// Events for one segment, in tie-break priority order. The limit a tracking
// policy rides is masked; control-bound events only exist when the control is
// free (tracking policies) and, on a fresh entry, only after the first
// element (control_gate).
EventSet build_events(const Scenario& sc, PolicyId active,
                      double control_gate) {
  EventSet es;
  const ModelParams p = sc.params;
  const int n = p.n;

  if (sc.limits.T_max && active != PolicyId::policy2) {
    const double lim = *sc.limits.T_max;
    EventFunction e;
    e.g = [n, lim](double, const Eigen::VectorXd& y, double) {
      return y.head(n).maxCoeff() - lim;
    };
    e.direction = +1;
    e.arm_margin = 0.05;
    e.name = "temperature-limit";
    es.fns.push_back(std::move(e));
    es.triggers.push_back(Trigger::temperature_limit);
  }
  if (sc.limits.v_max && active != PolicyId::policy3) {
    const double vmax = *sc.limits.v_max;
    EventFunction e;
    e.g = [p, n, vmax](double, const Eigen::VectorXd& y, double) {
      return interface_velocity(y[0], y[n], p) - vmax;
    };
    e.direction = +1;
    e.arm_margin = 0.005 * vmax;
    e.name = "velocity-limit";
    es.fns.push_back(std::move(e));
    es.triggers.push_back(Trigger::velocity_limit);
  }
  if (active != PolicyId::policy1) {
    EventFunction up;
    up.g = [ub = sc.bounds.tb_max](double, const Eigen::VectorXd&, double u) {
      return u - ub;
    };
    up.direction = +1;
    up.arm_margin = 1e-6;
    up.active_from = control_gate;
    up.name = "control-upper-bound";
    es.fns.push_back(std::move(up));
    es.triggers.push_back(Trigger::control_upper_bound);

    EventFunction lo;
    lo.g = [lb = sc.bounds.tb_min](double, const Eigen::VectorXd&, double u) {
      return lb - u;
    };
    lo.direction = +1;
    lo.arm_margin = 1e-6;
    lo.active_from = control_gate;
    lo.name = "control-lower-bound";
    es.fns.push_back(std::move(lo));
    es.triggers.push_back(Trigger::control_lower_bound);
  }
  {
    EventFunction term;
    term.g = [n, send = sc.terminal_S()](double, const Eigen::VectorXd& y,
                                         double) { return y[n] - send; };
    term.direction = +1;
    term.terminal = true;
    term.name = "termination";
    es.fns.push_back(std::move(term));
    es.triggers.push_back(Trigger::termination);
  }
  return es;
}

IntegrationOptions make_opts(const Numerics& num) {
  IntegrationOptions o;
  o.rtol = num.rtol;
  o.atol = num.atol;
  o.event_tol = num.event_tol;
  o.max_step = num.max_step;
  return o;
}

}  // namespace

void Scenario::validate() const {
  params.validate();
  bounds.validate();
  if (limits.T_max && !(*limits.T_max > 0))
    throw config_error("T_max must be > 0");
  if (limits.v_max && !(*limits.v_max > 0))
    throw config_error("v_max must be > 0");
  if (!(horizon > 0)) throw config_error("horizon_h must be > 0");
  if (!(num.rtol > 0)) throw config_error("rtol must be > 0");
  if (!(num.atol > 0)) throw config_error("atol must be > 0");
  if (!(num.event_tol > 0)) throw config_error("event_tol_s must be > 0");
  if (!(num.event_tol < num.max_step))
    throw config_error("event_tol_s must be below max_step_s");
  if (!(num.dt_element > 0)) throw config_error("dt_element_s must be > 0");
  if (!(num.lookahead >= num.dt_element))
    throw config_error("lookahead_h too small for the element width");
  if (!(num.colloc_tol > 0)) throw config_error("colloc_tol must be > 0");
  if (!(num.consistency_tol > 0))
    throw config_error("consistency_tol_K must be > 0");
  radau_nodes(num.colloc_points);
}

const char* trigger_name(Trigger t) {
  switch (t) {
    case Trigger::temperature_limit: return "temperature-limit";
    case Trigger::velocity_limit: return "velocity-limit";
    case Trigger::control_upper_bound: return "control-upper-bound";
    case Trigger::control_lower_bound: return "control-lower-bound";
    case Trigger::termination: return "termination";
  }
  return "?";
}

EventResiduals event_functions(const ProductState& s, double Tb,
                               const Scenario& sc,
                               std::optional<PolicyId> active) {
  EventResiduals r;
  if (sc.limits.T_max && active != PolicyId::policy2)
    r.temperature = s.T.maxCoeff() - *sc.limits.T_max;
  if (sc.limits.v_max && active != PolicyId::policy3)
    r.velocity = interface_velocity(s.T[0], s.S, sc.params) - *sc.limits.v_max;
  if (active && *active != PolicyId::policy1) {
    r.control_upper = Tb - sc.bounds.tb_max;
    r.control_lower = sc.bounds.tb_min - Tb;
  }
  r.terminal = s.S - sc.terminal_S();
  return r;
}

PolicyChoice select_policy(std::optional<Trigger> trigger, const Scenario& sc) {
  if (!trigger || *trigger == Trigger::control_upper_bound)
    return {PolicyId::policy1, sc.bounds.tb_max};
  switch (*trigger) {
    case Trigger::temperature_limit:
      if (!sc.limits.T_max)
        throw config_error("temperature trigger without a T_max limit");
      return {PolicyId::policy2, 0.0};
    case Trigger::velocity_limit:
      if (!sc.limits.v_max)
        throw config_error("velocity trigger without a v_max limit");
      return {PolicyId::policy3, 0.0};
    case Trigger::control_lower_bound:
      return {PolicyId::policy1, sc.bounds.tb_min};
    default:
      throw config_error("termination is not a policy trigger");
  }
}

IntegrationResult replay_detect(const CollocationSolution& colsol,
                                const Eigen::VectorXd& state0, double t0,
                                const Scenario& sc, PolicyId active,
                                bool fresh_entry,
                                std::vector<Trigger>* triggers_out) {
  // On a fresh (relaxed-initialization) entry the control swings through a
  // diffusion-time transient; control-bound events are gated until it has
  // passed, at the first element boundary past ~3 diffusion times. A bound
  // still violated at the gate fires there.
  double gate = -std::numeric_limits<double>::infinity();
  if (fresh_entry) {
    const double relax =
        3.0 * sc.params.H * sc.params.H / sc.params.alpha();
    gate = colsol.mesh.bounds.back();
    for (double b : colsol.mesh.bounds) {
      if (b >= t0 + relax && b > t0) {
        gate = b;
        break;
      }
    }
  }
  EventSet es = build_events(sc, active, gate);
  if (triggers_out) *triggers_out = es.triggers;

  JacobianPattern pattern = model_pattern(sc.params);
  auto control = [&colsol](double t) { return colsol.control_at(t); };
  IntegrationResult res =
      integrate(capped_rhs(sc.params), control, state0, t0, colsol.t1(),
                es.fns, make_opts(sc.num), &pattern, colsol.mesh.bounds);

  // Consistency of replay and collocation states at element ends, outside
  // the gated entry transient (the coarse mesh is not meant to resolve it).
  const int n = sc.params.n;
  const double check_from = fresh_entry ? gate : t0;
  for (std::size_t k = 1; k < colsol.mesh.bounds.size(); ++k) {
    const double tb = colsol.mesh.bounds[k];
    if (tb > res.trajectory.t_end() + 1e-9) break;
    if (tb < check_from) continue;
    const Eigen::VectorXd a = res.trajectory.eval(tb);
    const Eigen::VectorXd b = colsol.state_at(tb);
    const double drift = (a.head(n) - b.head(n)).cwiseAbs().maxCoeff();
    if (drift > sc.num.consistency_tol)
      throw consistency_error(
          "replay drifted " + std::to_string(drift) +
          " K from the collocation states; refine the element width");
  }
  return res;
}

Solution run(const Scenario& sc) {
  sc.validate();
  const ModelParams& p = sc.params;
  const int n = p.n;
  JacobianPattern pattern = model_pattern(p);
  const auto clamp_tb = [&](double u) {
    return std::clamp(u, sc.bounds.tb_min, sc.bounds.tb_max);
  };

  Solution sol;
  ProductState st = initial_state(p);
  double t = 0.0;
  Eigen::VectorXd y = pack(st);

  auto append = [&](const Trajectory& traj, PolicyId id) {
    for (const auto& s : traj.samples) {
      if (!sol.trajectory.samples.empty() &&
          s.t <= sol.trajectory.samples.back().t)
        continue;
      TrajectorySample cs = s;
      cs.u = clamp_tb(cs.u);
      sol.trajectory.samples.push_back(std::move(cs));
      sol.sample_policy.push_back(static_cast<int>(id));
    }
  };

  // Initial policy pick: a path constraint already active at t0 starts its
  // tracking policy immediately (temperature takes priority over velocity).
  std::optional<Trigger> tr0;
  {
    EventResiduals r0 = event_functions(st, 0.0, sc, std::nullopt);
    if (r0.temperature && *r0.temperature >= 0.0)
      tr0 = Trigger::temperature_limit;
    else if (r0.velocity && *r0.velocity >= 0.0)
      tr0 = Trigger::velocity_limit;
  }
  PolicyChoice choice = select_policy(tr0, sc);
  double tb0;
  if (choice.id == PolicyId::policy1) {
    tb0 = choice.level;
  } else if (choice.id == PolicyId::policy2) {
    tb0 = clamp_tb(policy2_reduced_control(st, p, *sc.limits.T_max, sc.bounds));
  } else {
    // No one-step reduction exists for the velocity policy; pin the control
    // at the value holding the bottom temperature steady.
    tb0 = clamp_tb(policy2_reduced_control(st, p, st.T[n - 1], sc.bounds));
  }
  if (choice.id != PolicyId::policy1)
    sol.events.push_back({0.0, *tr0, std::nullopt, choice.id});

  bool fresh_entry = true;
  int switches = 0;
  double last_switch = -std::numeric_limits<double>::infinity();
  if (!sol.events.empty()) last_switch = 0.0;

  auto register_switch = [&](double te, Trigger trig, PolicyId before) {
    if (++switches > 100)
      throw chattering_error("more than 100 policy switches");
    if (te - last_switch < 1.0)
      throw chattering_error("two policy switches within 1 s of model time");
    last_switch = te;
    PolicyChoice next = select_policy(trig, sc);
    sol.events.push_back({te, trig, before, next.id});
    choice = next;
    fresh_entry = true;
  };

  bool done = false;
  while (!done) {
    if (t >= sc.horizon - 1e-9) {
      sol.t_f = t;
      sol.complete = false;
      throw incomplete_drying(std::move(sol));
    }

    const auto wall0 = Clock::now();
    if (choice.id == PolicyId::policy1) {
      EventSet es = build_events(sc, PolicyId::policy1, 0.0);
      auto control = [lvl = choice.level](double) { return lvl; };
      IntegrationResult res;
      try {
        res = integrate(capped_rhs(p), control, y, t, sc.horizon, es.fns,
                        make_opts(sc.num), &pattern);
      } catch (integration_error& e) {
        throw integration_error(std::string("policy1 segment: ") + e.what(),
                                e.t_last);
      }
      append(res.trajectory, choice.id);
      sol.segments.push_back({choice.id, SolverKind::adaptive_integrator, t,
                              res.trajectory.t_end(), res.stats.accepted,
                              res.stats.newton_iters, seconds_since(wall0)});
      y = res.trajectory.samples.back().y;
      t = res.trajectory.t_end();
      if (!res.event) continue;  // horizon reached; loop top flags incomplete

      const Trigger trig = es.triggers[res.event->index];
      if (trig == Trigger::termination) {
        sol.events.push_back({res.event->t, trig, choice.id, choice.id});
        sol.t_f = res.event->t;
        done = true;
      } else {
        register_switch(res.event->t, trig, PolicyId::policy1);
        tb0 = choice.id == PolicyId::policy1 ? choice.level
                                             : clamp_tb(control(res.event->t));
      }
    } else {
      // Tracking policy: event-blind collocation over a lookahead window,
      // then replay with full event detection; roll the window forward while
      // nothing fires.
      const PolicyId active = choice.id;
      const double S_now = y[n];
      const double v_now = interface_velocity(y[0], S_now, p);
      double v_ref = std::max(v_now, active == PolicyId::policy3
                                         ? *sc.limits.v_max
                                         : 0.0);
      // Near the end of drying the window shrinks so the event-blind
      // collocation pass cannot push S past H (replay then finds the
      // termination inside the window).
      double window = std::min(sc.num.lookahead, sc.horizon - t);
      const double room = p.H * (1.0 - 2e-6) - S_now;
      if (v_ref > 0.0 && room > 0.0)
        window = std::min(window, std::max(1.0, 0.95 * room / (2.0 * v_ref)));
      window = std::min(std::max(window, 1e-6), sc.horizon - t);

      CollocationMesh mesh = CollocationMesh::uniform(
          t, t + window, sc.num.dt_element, sc.num.colloc_points);
      PolicySystem ps =
          active == PolicyId::policy2
              ? policy2_system(p, *sc.limits.T_max, tb0)
              : policy3_system(p, *sc.limits.v_max, tb0);

      CollocationSolution colsol;
      try {
        colsol = solve_segment(ps.residual, y, tb0, mesh, sc.num.colloc_tol);
      } catch (segment_error& e) {
        throw segment_error(std::string(policy_name(active)) +
                                " segment at t=" + std::to_string(t) + " s: " +
                                e.what(),
                            e.best_residual);
      }

      std::vector<Trigger> triggers;
      IntegrationResult res =
          replay_detect(colsol, y, t, sc, active, fresh_entry, &triggers);
      append(res.trajectory, active);
      sol.segments.push_back({active, SolverKind::collocation, t,
                              res.trajectory.t_end(),
                              static_cast<long>(mesh.elements()),
                              colsol.newton_iters + res.stats.newton_iters,
                              seconds_since(wall0)});
      y = res.trajectory.samples.back().y;
      t = res.trajectory.t_end();

      if (res.event) {
        const Trigger trig = triggers[res.event->index];
        if (trig == Trigger::termination) {
          sol.events.push_back({res.event->t, trig, active, active});
          sol.t_f = res.event->t;
          done = true;
        } else {
          register_switch(res.event->t, trig, active);
          tb0 = choice.id == PolicyId::policy1
                    ? choice.level
                    : clamp_tb(colsol.control_at(res.event->t));
        }
      } else {
        // No event in this window: keep tracking, continue the control.
        tb0 = clamp_tb(colsol.control_at(t));
        fresh_entry = false;
      }
    }
  }

  sol.complete = true;
  return sol;
}

}  // namespace lyodry
