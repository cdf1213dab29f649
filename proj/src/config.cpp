#include "config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace lyodry {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || !std::isfinite(x))
    throw config_error("invalid number for " + key + ": '" + v + "'");
  return x;
}

long parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw config_error("invalid integer for " + key + ": '" + v + "'");
  return x;
}

std::string fmt(double v) {
  char buf[40];
  // Shortest representation that round-trips exactly.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct KeyEntry {
  std::function<void(Scenario&, const std::string&)> set;
  std::function<std::string(const Scenario&)> get;
  const char* comment;
};

using KeyTable = std::vector<std::pair<std::string, KeyEntry>>;

const KeyTable& key_table() {
  static const KeyTable table = [] {
    KeyTable t;
    auto dbl = [&t](const char* key, double ModelParams::* field,
                    const char* comment) {
      t.push_back({key,
                   {[field, key](Scenario& sc, const std::string& v) {
                      sc.params.*field = parse_double(key, v);
                    },
                    [field](const Scenario& sc) { return fmt(sc.params.*field); },
                    comment}});
    };
    dbl("rho_f", &ModelParams::rho_f, "frozen density, kg/m^3");
    dbl("rho_e", &ModelParams::rho_e, "effective dried-region density, kg/m^3");
    dbl("cp_f", &ModelParams::cp_f, "frozen heat capacity, J/(kg K)");
    dbl("k_f", &ModelParams::k_f, "frozen thermal conductivity, W/(m K)");
    dbl("H", &ModelParams::H, "product height, m");
    dbl("d", &ModelParams::d, "product diameter, m");
    dbl("sigma", &ModelParams::sigma, "Stefan-Boltzmann constant, W/(m^2 K^4)");
    dbl("F_side", &ModelParams::F_side, "side radiative transfer factor");
    dbl("T_c", &ModelParams::T_c, "chamber wall temperature, K");
    dbl("R_p", &ModelParams::R_p, "mass-transfer resistance at S=0, Pa m^2 s/kg");
    dbl("R_p_A1", &ModelParams::R_p_A1, "dried-layer resistance slope, Pa m s/kg");
    dbl("R_p_A2", &ModelParams::R_p_A2, "dried-layer resistance saturation, 1/m");
    dbl("p_wc", &ModelParams::p_wc, "chamber water partial pressure, Pa");
    dbl("dH_sub", &ModelParams::dH_sub, "sublimation enthalpy, J/kg");
    dbl("K_v", &ModelParams::K_v, "shelf heat-transfer coefficient, W/(m^2 K)");
    dbl("T0", &ModelParams::T0, "initial product temperature, K");
    t.push_back({"n",
                 {[](Scenario& sc, const std::string& v) {
                    sc.params.n = static_cast<int>(parse_int("n", v));
                  },
                  [](const Scenario& sc) { return std::to_string(sc.params.n); },
                  "spatial grid points"}});
    dbl("psat_a", &ModelParams::psat_a, "ice saturation correlation intercept");
    dbl("psat_b", &ModelParams::psat_b, "ice saturation correlation slope, K");

    t.push_back({"tb_min",
                 {[](Scenario& sc, const std::string& v) {
                    sc.bounds.tb_min = parse_double("tb_min", v);
                  },
                  [](const Scenario& sc) { return fmt(sc.bounds.tb_min); },
                  "shelf temperature lower bound, K"}});
    t.push_back({"tb_max",
                 {[](Scenario& sc, const std::string& v) {
                    sc.bounds.tb_max = parse_double("tb_max", v);
                  },
                  [](const Scenario& sc) { return fmt(sc.bounds.tb_max); },
                  "shelf temperature upper bound, K"}});

    auto opt = [&t](const char* key, std::optional<double> Setpoints::* field,
                    const char* comment) {
      t.push_back({key,
                   {[field, key](Scenario& sc, const std::string& v) {
                      if (v == "none") sc.limits.*field = std::nullopt;
                      else sc.limits.*field = parse_double(key, v);
                    },
                    [field](const Scenario& sc) {
                      const auto& f = sc.limits.*field;
                      return f ? fmt(*f) : std::string("none");
                    },
                    comment}});
    };
    opt("T_max", &Setpoints::T_max, "product temperature limit, K (or none)");
    opt("v_max", &Setpoints::v_max, "interface velocity limit, m/s (or none)");

    t.push_back({"horizon_h",
                 {[](Scenario& sc, const std::string& v) {
                    sc.horizon = parse_double("horizon_h", v) * 3600.0;
                  },
                  [](const Scenario& sc) { return fmt(sc.horizon / 3600.0); },
                  "safety stop, h"}});

    auto num = [&t](const char* key, double Numerics::* field,
                    const char* comment, double scale = 1.0) {
      t.push_back({key,
                   {[field, key, scale](Scenario& sc, const std::string& v) {
                      sc.num.*field = parse_double(key, v) * scale;
                    },
                    [field, scale](const Scenario& sc) {
                      return fmt(sc.num.*field / scale);
                    },
                    comment}});
    };
    num("rtol", &Numerics::rtol, "integrator relative tolerance");
    num("atol", &Numerics::atol, "integrator absolute tolerance");
    num("event_tol_s", &Numerics::event_tol, "event localization tolerance, s");
    num("max_step_s", &Numerics::max_step, "integrator step cap, s");
    num("dt_element_s", &Numerics::dt_element, "collocation element width, s");
    num("lookahead_h", &Numerics::lookahead, "event-blind window, h", 3600.0);
    num("colloc_tol", &Numerics::colloc_tol, "collocation residual tolerance");
    num("consistency_tol_K", &Numerics::consistency_tol,
        "replay drift tolerance, K");
    t.push_back({"colloc_points",
                 {[](Scenario& sc, const std::string& v) {
                    sc.num.colloc_points =
                        static_cast<int>(parse_int("colloc_points", v));
                  },
                  [](const Scenario& sc) {
                    return std::to_string(sc.num.colloc_points);
                  },
                  "collocation points per element (2, 3 or 5)"}});
    t.push_back({"seed",
                 {[](Scenario& sc, const std::string& v) {
                    sc.num.seed = static_cast<unsigned>(parse_int("seed", v));
                  },
                  [](const Scenario& sc) { return std::to_string(sc.num.seed); },
                  "baseline search seed"}});
    return t;
  }();
  return table;
}

const KeyEntry* find_key(const std::string& key) {
  for (const auto& [k, e] : key_table())
    if (k == key) return &e;
  return nullptr;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

Scenario load_config_text(const std::string& text, const std::string& origin) {
  Scenario sc;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeyEntry* entry = find_key(key);
    if (entry == nullptr)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": unknown key '" + key + "'");
    try {
      entry->set(sc, value);
    } catch (config_error& e) {
      throw config_error(origin + ":" + std::to_string(lineno) + ": " +
                         e.what());
    }
    seen[key] = true;
  }
  for (const auto& [k, e] : key_table())
    if (!seen.count(k))
      throw config_error(origin + ": missing key '" + k + "'");
  sc.validate();
  return sc;
}

Scenario load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

void apply_override(Scenario& sc, const std::string& key,
                    const std::string& value) {
  const KeyEntry* entry = find_key(key);
  if (entry == nullptr) throw config_error("unknown key '" + key + "'");
  entry->set(sc, value);
  sc.validate();
}

std::string dump_config(const Scenario& sc) {
  std::ostringstream out;
  out << "# lyodry configuration\n";
  for (const auto& [k, e] : key_table())
    out << k << " = " << e.get(sc) << "  # " << e.comment << "\n";
  return out.str();
}

bool is_builtin_scenario(const std::string& name) {
  return name == "problem1" || name == "problem2" || name == "custom";
}

std::string builtin_config_text(const std::string& name) {
  Scenario sc;  // library defaults
  sc.name = name;
  if (name == "problem1") {
    sc.limits.T_max = 243.0;
    sc.limits.v_max = std::nullopt;
    sc.bounds = {228.0, 273.0};
  } else if (name == "problem2") {
    sc.limits.T_max = 240.0;
    sc.limits.v_max = 2.8e-7;
    sc.bounds = {228.0, 260.0};
  } else if (name == "custom") {
    sc.limits = {};
  } else {
    throw config_error("unknown scenario '" + name +
                       "' (expected problem1, problem2 or custom)");
  }
  return dump_config(sc);
}

Scenario builtin_scenario(const std::string& name) {
  Scenario sc = load_config_text(builtin_config_text(name), name);
  sc.name = name;
  return sc;
}

}  // namespace lyodry
