#include "runner.hpp"
#include "scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#ifndef BEARING_SCENARIO_DIR
#define BEARING_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace bearing::cli;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kCheckFailure = 2;

fs::path resolve(const std::string& arg, const fs::path& dir) {
  if (fs::exists(arg)) return arg;
  const fs::path bundled = dir / (arg + ".json");
  if (fs::exists(bundled)) return bundled;
  throw ConfigError(arg + ": no such file or bundled scenario");
}

void write_outputs(const ScenarioConfig& cfg, const ScenarioResult& res) {
  if (!cfg.output.csv_path.empty()) {
    std::ofstream out(cfg.output.csv_path, std::ios::binary);
    if (!out) throw ConfigError("output.csv_path: cannot write " + cfg.output.csv_path);
    write_csv(out, res);
  }
  if (!cfg.output.report_path.empty()) {
    std::ofstream out(cfg.output.report_path, std::ios::binary);
    if (!out) throw ConfigError("output.report_path: cannot write " + cfg.output.report_path);
    out << report_json(cfg, res).dump(2) << '\n';
  }
}

int run(const std::string& arg, const std::vector<std::string>& overrides, const fs::path& dir, bool quiet) {
  const fs::path path = resolve(arg, dir);
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(raw, o);
  if (const char* seed = std::getenv("BEARING_DYN_SEED")) {
    try {
      raw["seed"] = std::stoull(seed);
    } catch (const std::exception&) {
      throw ConfigError("BEARING_DYN_SEED: not a non-negative integer");
    }
  }
  const ScenarioConfig cfg = parse_config(raw);
  const ScenarioResult res = run_scenario(cfg);
  write_outputs(cfg, res);
  if (!quiet) {
    std::cout << cfg.name << " (" << cfg.system << ")\n";
    for (const auto& c : res.checks)
      std::cout << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << " = " << format_number(c.value) << ' '
                << (c.at_least ? ">=" : "<=") << ' ' << format_number(c.tolerance) << '\n';
    std::cout << (res.passed() ? "PASSED" : "FAILED") << '\n';
  }
  return res.passed() ? kPass : kCheckFailure;
}

int list(const fs::path& dir) {
  for (const auto& e : catalog(dir)) {
    std::cout << e.name;
    if (e.criterion) std::cout << " [criterion " << *e.criterion << ']';
    std::cout << "  " << e.description << '\n';
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario runner for ball-bearing dynamics"};
  app.require_subcommand(1);
  bool quiet = false;
  std::string scenario_dir = BEARING_SCENARIO_DIR;
  app.add_flag("-q,--quiet", quiet, "Suppress the per-check summary");
  app.add_option("--scenario-dir", scenario_dir, "Directory of bundled scenarios");

  auto* run_cmd = app.add_subcommand("run", "Run a scenario config (path or bundled name)");
  std::string config;
  std::vector<std::string> overrides;
  run_cmd->add_option("config", config, "Scenario JSON file or bundled scenario name")->required();
  run_cmd->add_option("--override", overrides, "Dotted-path override key=value (repeatable)");
  run_cmd->add_flag("-q,--quiet", quiet, "Suppress the per-check summary");

  app.add_subcommand("list", "List bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (run_cmd->parsed()) return run(config, overrides, scenario_dir, quiet);
    return list(scenario_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
}
