#pragma once

#include "scenario.hpp"

#include "bearing/verification.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace bearing::cli {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool at_least = false;  // true: pass when value >= tolerance
  bool passed = false;
};

struct ScenarioResult {
  verification::DriftReport report;
  std::vector<CheckResult> checks;
  std::vector<std::string> csv_header;
  std::vector<std::vector<double>> csv_rows;

  bool passed() const;
};

/// Runs the scenario and evaluates every enabled check. Throws ConfigError for
/// semantically invalid configurations and DomainError/IntegrationError for
/// runtime failures.
ScenarioResult run_scenario(const ScenarioConfig& config);

/// Shortest-roundtrip-safe 17 significant digit formatting, locale independent.
std::string format_number(double value);

void write_csv(std::ostream& out, const ScenarioResult& result);
json report_json(const ScenarioConfig& config, const ScenarioResult& result);

}  // namespace bearing::cli
