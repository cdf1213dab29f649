#pragma once

#include <string>

#include "lyodry/lyodry.h"

namespace lyocli {

// trajectory.csv: t_s, T_1_K..T_n_K, S_m, dSdt_m_per_s, Tb_K, policy_id
void write_trajectory_csv(const lyo_scenario* sc, const lyo_solution* sol,
                          const std::string& path);

void write_events_json(const lyo_solution* sol, const std::string& path);

void write_summary_json(const lyo_scenario* sc, const lyo_solution* sol,
                        double wall_s, const std::string& path);

void write_benchmark_json(const lyo_scenario* sc,
                          const lyo_benchmark_report& rep,
                          const std::string& path);

}  // namespace lyocli
