#pragma once

// Scenario configuration: JSON schema, parsing with unknown-key rejection,
// dotted-path overrides and the bundled catalog.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bearing::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CheckConfig {
  bool enabled = true;
  double tolerance = 0.0;
  json options = json::object();  // check-specific keys
};

struct IntegrationConfig {
  double h = 1e-3;
  double t_end = 1.0;
  int sample_every = 10;
};

struct OutputConfig {
  std::string csv_path;
  std::string report_path;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::optional<int> criterion;
  std::string system;  // spherical | planar | planar-levelset | planar-oracle-compare
  json params = json::object();
  json initial_state = json::object();
  IntegrationConfig integration;
  std::map<std::string, CheckConfig> checks;
  OutputConfig output;
  std::uint64_t seed = 0;
};

/// Validates and converts. Throws ConfigError naming the offending path.
ScenarioConfig parse_config(const json& j);
json to_json(const ScenarioConfig& c);

ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies `key=value` with a dotted key; value is parsed as JSON, falling
/// back to a plain string.
void apply_override(json& j, const std::string& assignment);

/// Check names accepted by each system.
const std::vector<std::string>& known_checks(const std::string& system);

struct CatalogEntry {
  std::string name;
  std::string description;
  std::optional<int> criterion;
  std::filesystem::path path;
};

std::vector<CatalogEntry> catalog(const std::filesystem::path& dir);

}  // namespace bearing::cli
