#include "export.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace lyocli {

using nlohmann::json;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(const lyo_scenario* sc, const lyo_solution* sol,
                          const std::string& path) {
  const int n = lyo_scenario_grid_points(sc);
  std::string out;
  out += "t_s";
  for (int k = 1; k <= n; ++k) out += ",T_" + std::to_string(k) + "_K";
  out += ",S_m,dSdt_m_per_s,Tb_K,policy_id\n";

  std::vector<double> temps(n);
  const size_t m = lyo_solution_sample_count(sol);
  for (size_t i = 0; i < m; ++i) {
    double t, S, dSdt, Tb;
    int policy;
    if (lyo_solution_sample(sol, i, &t, temps.data(), &S, &dSdt, &Tb,
                            &policy) != LYO_OK)
      throw std::runtime_error(lyo_last_error());
    out += num(t);
    for (int k = 0; k < n; ++k) {
      out += ',';
      out += num(temps[k]);
    }
    out += ',';
    out += num(S);
    out += ',';
    out += num(dSdt);
    out += ',';
    out += num(Tb);
    out += ',';
    out += std::to_string(policy);
    out += '\n';
  }
  write_file(path, out);
}

void write_events_json(const lyo_solution* sol, const std::string& path) {
  json events = json::array();
  const size_t m = lyo_solution_event_count(sol);
  for (size_t i = 0; i < m; ++i) {
    double t;
    int trigger, before, after;
    if (lyo_solution_event(sol, i, &t, &trigger, &before, &after) != LYO_OK)
      throw std::runtime_error(lyo_last_error());
    json e;
    e["time_s"] = t;
    e["time_h"] = t / 3600.0;
    e["trigger"] = lyo_trigger_name(trigger);
    e["policy_before"] = before == 0 ? json(nullptr)
                                     : json(lyo_policy_name(before));
    e["policy_after"] = lyo_policy_name(after);
    events.push_back(e);
  }
  json root;
  root["events"] = events;
  root["count"] = m;
  write_file(path, root.dump(2) + "\n");
}

void write_summary_json(const lyo_scenario* sc, const lyo_solution* sol,
                        double wall_s, const std::string& path) {
  json root;
  root["scenario"] = lyo_scenario_name(sc);
  root["complete"] = lyo_solution_complete(sol) != 0;
  root["t_f_s"] = lyo_solution_drying_time(sol);
  root["t_f_h"] = lyo_solution_drying_time(sol) / 3600.0;
  root["n_samples"] = lyo_solution_sample_count(sol);
  root["n_events"] = lyo_solution_event_count(sol);
  root["wall_time_s"] = wall_s;

  json segs = json::array();
  const size_t m = lyo_solution_segment_count(sol);
  for (size_t i = 0; i < m; ++i) {
    int policy, solver;
    double t0, t1, ws;
    long steps, newton;
    if (lyo_solution_segment(sol, i, &policy, &solver, &t0, &t1, &steps,
                             &newton, &ws) != LYO_OK)
      throw std::runtime_error(lyo_last_error());
    json s;
    s["policy"] = lyo_policy_name(policy);
    s["solver"] = solver == 1 ? "collocation" : "adaptive-integrator";
    s["t_begin_s"] = t0;
    s["t_end_s"] = t1;
    s["steps"] = steps;
    s["newton_iterations"] = newton;
    s["wall_s"] = ws;
    segs.push_back(s);
  }
  root["segments"] = segs;
  write_file(path, root.dump(2) + "\n");
}

void write_benchmark_json(const lyo_scenario* sc,
                          const lyo_benchmark_report& rep,
                          const std::string& path) {
  json root;
  root["scenario"] = lyo_scenario_name(sc);
  root["n_intervals"] = rep.n_intervals;
  root["simulation_based"] = {{"t_f_s", rep.sim_t_f},
                              {"t_f_h", rep.sim_t_f / 3600.0},
                              {"wall_s", rep.sim_wall_s}};
  root["cvp_baseline"] = {{"t_f_s", rep.cvp_t_f},
                          {"t_f_h", rep.cvp_t_f / 3600.0},
                          {"wall_s", rep.cvp_wall_s},
                          {"evaluations", rep.cvp_evaluations},
                          {"violation", rep.cvp_violation}};
  root["speedup"] = rep.speedup;
  write_file(path, root.dump(2) + "\n");
}

}  // namespace lyocli
