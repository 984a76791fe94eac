#include "scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace bearing::cli {

namespace {

using Keys = std::set<std::string>;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, const Keys& allowed) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
}

void require_keys(const json& j, const std::string& path, const Keys& required) {
  for (const auto& key : required)
    if (!j.contains(key)) fail(path + "." + key, "missing required key");
}

void require_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
}

void require_vector(const json& j, const std::string& path, std::size_t size) {
  if (!j.is_array() || j.size() != size) fail(path, "expected an array of " + std::to_string(size) + " numbers");
  for (std::size_t i = 0; i < size; ++i) require_number(j[i], path + "[" + std::to_string(i) + "]");
}

void require_vector_list(const json& j, const std::string& path, std::size_t size) {
  if (!j.is_array()) fail(path, "expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) require_vector(j[i], path + "[" + std::to_string(i) + "]", size);
}

void check_numbers(const json& j, const std::string& path, const Keys& keys) {
  for (const auto& key : keys)
    if (j.contains(key)) require_number(j[key], path + "." + key);
}

bool is_spherical(const std::string& system) { return system == "spherical"; }

void validate_params(const std::string& system, const json& p) {
  const std::string path = "params";
  require_object(p, path);
  if (is_spherical(system)) {
    reject_unknown(p, path, {"R", "r", "A", "B", "C", "balls", "epsilon_override"});
    require_keys(p, path, {"R", "r", "A", "B", "C", "balls"});
    check_numbers(p, path, {"R", "r", "A", "B", "C", "epsilon_override"});
  } else {
    reject_unknown(p, path, {"r", "m", "I", "balls"});
    require_keys(p, path, {"r", "m", "I", "balls"});
    check_numbers(p, path, {"r", "m", "I"});
  }
  const json& balls = p["balls"];
  if (!balls.is_array() || balls.empty()) fail(path + ".balls", "expected a non-empty array");
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const std::string bp = path + ".balls[" + std::to_string(i) + "]";
    require_object(balls[i], bp);
    const Keys keys = is_spherical(system) ? Keys{"inertia", "mass", "c"} : Keys{"inertia", "mass"};
    reject_unknown(balls[i], bp, keys);
    require_keys(balls[i], bp, {"inertia", "mass"});
    check_numbers(balls[i], bp, keys);
  }
}

void validate_initial(const std::string& system, const json& s, std::size_t n) {
  const std::string path = "initial_state";
  require_object(s, path);
  const bool random = s.value("random", false);
  if (s.contains("random") && !s["random"].is_boolean()) fail(path + ".random", "expected a boolean");
  if (is_spherical(system)) {
    reject_unknown(s, path, {"omega", "gamma", "random", "full"});
    if (s.contains("full") && !s["full"].is_boolean()) fail(path + ".full", "expected a boolean");
    if (!random) {
      require_keys(s, path, {"omega", "gamma"});
      require_vector(s["omega"], path + ".omega", 3);
      require_vector_list(s["gamma"], path + ".gamma", 3);
      if (s["gamma"].size() != n) fail(path + ".gamma", "needs one direction per ball");
    }
  } else if (system == "planar-levelset") {
    reject_unknown(s, path, {"d1", "d2", "d3", "y"});
    require_keys(s, path, {"d1", "d2", "d3", "y"});
    check_numbers(s, path, {"d1", "d2", "d3"});
    require_vector(s["y"], path + ".y", 3);
  } else {
    reject_unknown(s, path, {"x", "y", "phi", "v", "centers", "spins", "random"});
    check_numbers(s, path, {"x", "y", "phi"});
    if (s.contains("spins")) {
      require_vector(s["spins"], path + ".spins", n);
    }
    if (!random) {
      require_keys(s, path, {"v", "centers"});
      require_vector(s["v"], path + ".v", 3);
      require_vector_list(s["centers"], path + ".centers", 2);
      if (s["centers"].size() != n) fail(path + ".centers", "needs one center per ball");
    }
  }
}

const std::map<std::string, Keys>& check_options() {
  static const std::map<std::string, Keys> options = {
      {"integrals", {}},
      {"constraints", {}},
      {"kinematics", {}},
      {"orthogonality", {}},
      {"admissibility", {}},
      {"triangle", {}},
      {"closed_form", {}},
      {"equivalence", {}},
      {"multiplier_relations", {}},
      {"measure_transport", {"t_end", "density"}},
      {"divergence", {"samples"}},
      {"levelset_divergence", {"samples"}},
      {"epsilon_limit", {"R_limit"}},
      {"lr_evolution", {"samples"}},
      {"convergence_order", {"h", "t_end"}},
      {"derivative_agreement", {"samples"}},
  };
  return options;
}

CheckConfig parse_check(const std::string& name, const json& j) {
  const std::string path = "checks." + name;
  require_object(j, path);
  Keys allowed = check_options().at(name);
  allowed.insert("enabled");
  allowed.insert("tolerance");
  reject_unknown(j, path, allowed);
  require_keys(j, path, {"tolerance"});
  require_number(j["tolerance"], path + ".tolerance");
  CheckConfig c;
  c.tolerance = j["tolerance"].get<double>();
  if (j.contains("enabled")) {
    if (!j["enabled"].is_boolean()) fail(path + ".enabled", "expected a boolean");
    c.enabled = j["enabled"].get<bool>();
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "enabled" || key == "tolerance") continue;
    if (key == "density") {
      if (!value.is_string() || (value != "sqrt_det" && value != "unit"))
        fail(path + ".density", "expected \"sqrt_det\" or \"unit\"");
    } else if (key == "samples") {
      if (!value.is_number_integer() || value.get<long long>() < 1) fail(path + ".samples", "expected a positive integer");
    } else {
      require_number(value, path + "." + key);
    }
    c.options[key] = value;
  }
  return c;
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback = "") {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) fail(key, "expected a string");
  return j[key].get<std::string>();
}

}  // namespace

const std::vector<std::string>& known_checks(const std::string& system) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"spherical",
       {"integrals", "constraints", "kinematics", "orthogonality", "admissibility", "measure_transport", "divergence",
        "epsilon_limit", "lr_evolution", "convergence_order"}},
      {"planar",
       {"integrals", "constraints", "triangle", "admissibility", "measure_transport", "divergence",
        "levelset_divergence", "convergence_order"}},
      {"planar-levelset", {"integrals", "closed_form", "divergence", "admissibility", "convergence_order"}},
      {"planar-oracle-compare",
       {"equivalence", "derivative_agreement", "multiplier_relations", "constraints", "integrals", "triangle",
        "admissibility"}},
  };
  const auto it = table.find(system);
  if (it == table.end()) throw ConfigError("system: unknown system \"" + system + "\"");
  return it->second;
}

ScenarioConfig parse_config(const json& j) {
  require_object(j, "config");
  reject_unknown(j, "config",
                 {"name", "description", "criterion", "system", "params", "initial_state", "integration", "checks",
                  "output", "seed"});
  require_keys(j, "config", {"name", "system", "params", "initial_state", "integration"});

  ScenarioConfig c;
  c.name = get_string(j, "name");
  if (c.name.empty()) fail("name", "must be non-empty");
  c.description = get_string(j, "description");
  if (j.contains("criterion") && !j["criterion"].is_null()) {
    if (!j["criterion"].is_number_integer()) fail("criterion", "expected an integer or null");
    c.criterion = j["criterion"].get<int>();
  }
  c.system = get_string(j, "system");
  const auto& allowed_checks = known_checks(c.system);

  validate_params(c.system, j["params"]);
  c.params = j["params"];
  validate_initial(c.system, j["initial_state"], c.params["balls"].size());
  c.initial_state = j["initial_state"];

  const json& integ = j["integration"];
  require_object(integ, "integration");
  reject_unknown(integ, "integration", {"h", "t_end", "sample_every"});
  require_keys(integ, "integration", {"h", "t_end"});
  check_numbers(integ, "integration", {"h", "t_end"});
  c.integration.h = integ["h"].get<double>();
  c.integration.t_end = integ["t_end"].get<double>();
  if (!(c.integration.h > 0.0)) fail("integration.h", "must be positive");
  if (!(c.integration.t_end > 0.0)) fail("integration.t_end", "must be positive");
  if (integ.contains("sample_every")) {
    if (!integ["sample_every"].is_number_integer() || integ["sample_every"].get<long long>() < 1)
      fail("integration.sample_every", "expected a positive integer");
    c.integration.sample_every = integ["sample_every"].get<int>();
  }

  if (j.contains("checks")) {
    require_object(j["checks"], "checks");
    for (const auto& [name, value] : j["checks"].items()) {
      if (std::find(allowed_checks.begin(), allowed_checks.end(), name) == allowed_checks.end())
        fail("checks." + name, "unknown check for system " + c.system);
      c.checks[name] = parse_check(name, value);
    }
  }

  if (j.contains("output")) {
    require_object(j["output"], "output");
    reject_unknown(j["output"], "output", {"csv_path", "report_path"});
    c.output.csv_path = get_string(j["output"], "csv_path");
    c.output.report_path = get_string(j["output"], "report_path");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      fail("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["criterion"] = c.criterion ? json(*c.criterion) : json(nullptr);
  j["system"] = c.system;
  j["params"] = c.params;
  j["initial_state"] = c.initial_state;
  j["integration"] = {{"h", c.integration.h}, {"t_end", c.integration.t_end},
                      {"sample_every", c.integration.sample_every}};
  json checks = json::object();
  for (const auto& [name, check] : c.checks) {
    json cj = check.options;
    cj["enabled"] = check.enabled;
    cj["tolerance"] = check.tolerance;
    checks[name] = cj;
  }
  j["checks"] = checks;
  j["output"] = {{"csv_path", c.output.csv_path}, {"report_path", c.output.report_path}};
  j["seed"] = c.seed;
  return j;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override \"" + assignment + "\": expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override \"" + key + "\": empty path component");
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError("override \"" + key + "\": \"" + part + "\" is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("override \"" + key + "\": index out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null())
        throw ConfigError("override \"" + key + "\": cannot descend into a scalar");
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

std::vector<CatalogEntry> catalog(const std::filesystem::path& dir) {
  std::vector<CatalogEntry> out;
  if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + ": scenario directory not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto c = load_config(f);
    out.push_back({c.name, c.description, c.criterion, f});
  }
  return out;
}

}  // namespace bearing::cli
