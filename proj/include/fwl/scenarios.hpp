#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace fwl {

struct RunOptions {
  std::string out_dir = ".";
  std::optional<double> grid_R;
  std::optional<double> grid_h;
  bool write_files = true;
};

struct RunReport {
  std::string scenario;
  bool pass = false;
  std::string csv;
  nlohmann::json summary;
  double wall_ms = 0.0;
  std::string csv_path;
  std::string json_path;
};

// Runs one scenario from a validated JSON config; writes <scenario>.csv and
// <scenario>.json under out_dir. Exit-code mapping: 0 pass, 2 threshold
// failure, 1 error (ConfigError and friends propagate as exceptions).
RunReport run_scenario(const nlohmann::json& config, const RunOptions& options);

struct ScenarioInfo {
  std::string name;
  std::string required_keys;
  std::string statement;  // one-line description of what the scenario verifies
};

const std::vector<ScenarioInfo>& list_scenarios();

}  // namespace fwl
