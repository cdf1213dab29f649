#pragma once

#include <string>

#include "controller.hpp"

namespace lyodry {

// Flat key = value configuration with '#' comments. Unknown keys are
// rejected; all model and scenario keys must be present (built-in scenarios
// supply complete files). Optional limits accept the value "none".
Scenario load_config_text(const std::string& text,
                          const std::string& origin = "<string>");
Scenario load_config_file(const std::string& path);

// Single key override, same key table and validation as the file parser.
void apply_override(Scenario& sc, const std::string& key,
                    const std::string& value);

// Effective configuration; load_config_text(dump_config(sc)) reproduces sc
// exactly.
std::string dump_config(const Scenario& sc);

bool is_builtin_scenario(const std::string& name);
std::string builtin_config_text(const std::string& name);
Scenario builtin_scenario(const std::string& name);

}  // namespace lyodry
