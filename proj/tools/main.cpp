#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "export.hpp"
#include "lyodry/lyodry.h"

namespace {

namespace fs = std::filesystem;

struct ScenarioDeleter {
  void operator()(lyo_scenario* p) const { lyo_scenario_free(p); }
};
struct SolutionDeleter {
  void operator()(lyo_solution* p) const { lyo_solution_free(p); }
};
using ScenarioPtr = std::unique_ptr<lyo_scenario, ScenarioDeleter>;
using SolutionPtr = std::unique_ptr<lyo_solution, SolutionDeleter>;

struct CommonArgs {
  std::string scenario = "problem1";
  std::string config;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::string format = "both";
  double rtol = -1.0, atol = -1.0, elements_per_hour = -1.0;
  long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--scenario", a.scenario,
                  "builtin scenario: problem1, problem2 or custom");
  cmd->add_option("--config", a.config, "parameter file (key = value)");
  cmd->add_option("--set", a.sets, "override, key=value (repeatable)");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--format", a.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  cmd->add_option("--rtol", a.rtol, "integrator relative tolerance");
  cmd->add_option("--atol", a.atol, "integrator absolute tolerance");
  cmd->add_option("--elements-per-hour", a.elements_per_hour,
                  "collocation elements per hour of model time");
  cmd->add_option("--seed", a.seed, "baseline search seed");
}

int fail(lyo_status rc, const char* what) {
  std::fprintf(stderr, "{\"error\": \"%s\", \"detail\": \"%s\", \"code\": %d}\n",
               what, lyo_last_error(), static_cast<int>(rc));
  return static_cast<int>(rc);
}

lyo_status build_scenario(const CommonArgs& a, ScenarioPtr& out) {
  lyo_scenario* raw = nullptr;
  lyo_status rc;
  if (!a.config.empty()) {
    rc = lyo_scenario_from_file(a.config.c_str(), &raw);
    if (rc != LYO_OK) return rc;
    out.reset(raw);
    if (a.scenario != "custom") {
      // A builtin name with an explicit config keeps the file values; the
      // name only labels the outputs.
    }
  } else {
    rc = lyo_scenario_builtin(a.scenario.c_str(), &raw);
    if (rc != LYO_OK) return rc;
    out.reset(raw);
  }
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      return LYO_ERR_CONFIG;
    }
    rc = lyo_scenario_set(out.get(), kv.substr(0, eq).c_str(),
                          kv.substr(eq + 1).c_str());
    if (rc != LYO_OK) return rc;
  }
  auto set_num = [&](const char* key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return lyo_scenario_set(out.get(), key, buf);
  };
  if (a.rtol > 0 && (rc = set_num("rtol", a.rtol)) != LYO_OK) return rc;
  if (a.atol > 0 && (rc = set_num("atol", a.atol)) != LYO_OK) return rc;
  if (a.elements_per_hour > 0 &&
      (rc = set_num("dt_element_s", 3600.0 / a.elements_per_hour)) != LYO_OK)
    return rc;
  if (a.seed >= 0 &&
      (rc = lyo_scenario_set(out.get(), "seed",
                             std::to_string(a.seed).c_str())) != LYO_OK)
    return rc;
  return LYO_OK;
}

int cmd_simulate(const CommonArgs& a) {
  ScenarioPtr sc;
  lyo_status rc = build_scenario(a, sc);
  if (rc != LYO_OK) return fail(rc, "scenario construction failed");

  fs::create_directories(a.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  lyo_solution* raw = nullptr;
  rc = lyo_simulate(sc.get(), &raw);
  SolutionPtr sol(raw);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (rc != LYO_OK && rc != LYO_ERR_INCOMPLETE)
    return fail(rc, "simulation failed");

  // Partial outputs are still written on incomplete drying.
  try {
    const fs::path dir(a.out_dir);
    if (a.format == "csv" || a.format == "both")
      lyocli::write_trajectory_csv(sc.get(), sol.get(),
                                   (dir / "trajectory.csv").string());
    if (a.format == "json" || a.format == "both") {
      lyocli::write_events_json(sol.get(), (dir / "events.json").string());
      lyocli::write_summary_json(sc.get(), sol.get(), wall,
                                 (dir / "summary.json").string());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\": \"output failed\", \"detail\": \"%s\"}\n",
                 e.what());
    return 1;
  }
  if (rc == LYO_ERR_INCOMPLETE) return fail(rc, "incomplete drying");
  std::printf("t_f = %.6g h, events = %zu, samples = %zu, wall = %.3f s\n",
              lyo_solution_drying_time(sol.get()) / 3600.0,
              lyo_solution_event_count(sol.get()),
              lyo_solution_sample_count(sol.get()), wall);
  return 0;
}

int cmd_benchmark(const CommonArgs& a, int n_intervals) {
  ScenarioPtr sc;
  lyo_status rc = build_scenario(a, sc);
  if (rc != LYO_OK) return fail(rc, "scenario construction failed");

  fs::create_directories(a.out_dir);
  lyo_benchmark_report rep{};
  rc = lyo_benchmark(sc.get(), n_intervals, &rep);
  if (rc != LYO_OK) return fail(rc, "benchmark failed");
  try {
    lyocli::write_benchmark_json(
        sc.get(), rep, (fs::path(a.out_dir) / "benchmark.json").string());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\": \"output failed\", \"detail\": \"%s\"}\n",
                 e.what());
    return 1;
  }
  std::printf(
      "simulation: t_f = %.6g h in %.4f s | baseline: t_f = %.6g h in %.2f s "
      "(%ld evaluations) | speedup = %.0fx\n",
      rep.sim_t_f / 3600.0, rep.sim_wall_s, rep.cvp_t_f / 3600.0,
      rep.cvp_wall_s, rep.cvp_evaluations, rep.speedup);
  return 0;
}

int cmd_dump_config(const CommonArgs& a, bool to_stdout) {
  ScenarioPtr sc;
  lyo_status rc = build_scenario(a, sc);
  if (rc != LYO_OK) return fail(rc, "scenario construction failed");
  char* text = nullptr;
  rc = lyo_scenario_dump(sc.get(), &text);
  if (rc != LYO_OK) return fail(rc, "dump failed");
  if (to_stdout) {
    std::fputs(text, stdout);
  } else {
    fs::create_directories(a.out_dir);
    const auto path = fs::path(a.out_dir) / "effective-config.txt";
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) {
      lyo_string_free(text);
      std::fprintf(stderr, "cannot write %s\n", path.string().c_str());
      return 1;
    }
    std::fputs(text, f);
    std::fclose(f);
  }
  lyo_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lyodry: simulation-based optimal shelf-temperature "
               "trajectories for lyophilization primary drying"};
  app.require_subcommand(1);

  CommonArgs sim_args, bench_args, dump_args;
  int n_intervals = 32;
  bool to_stdout = false;

  auto* sim = app.add_subcommand("simulate",
                                 "run the hybrid controller and export the "
                                 "trajectory, events and summary");
  add_common(sim, sim_args);

  auto* bench = app.add_subcommand(
      "benchmark", "head-to-head against the CVP direct-method baseline");
  add_common(bench, bench_args);
  bench->add_option("--intervals", n_intervals, "CVP control intervals")
      ->check(CLI::Range(4, 64));

  auto* dump = app.add_subcommand("dump-config",
                                  "write the effective configuration");
  add_common(dump, dump_args);
  dump->add_flag("--stdout", to_stdout, "print to stdout instead of a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) return cmd_simulate(sim_args);
  if (bench->parsed()) return cmd_benchmark(bench_args, n_intervals);
  if (dump->parsed()) return cmd_dump_config(dump_args, to_stdout);
  return 2;
}
