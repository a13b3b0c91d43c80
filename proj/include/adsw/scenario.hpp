#pragma once

#include <string>

#include "adsw/io.hpp"

namespace adsw {

// Scenario config:
// {
//   "problem":    path to a problem file,
//   "profile":    profile config object,
//   "experiment": one of assumptions | basis | geometric | gml | sweep |
//                 multistep | gaps | divergence-demo,
//   "parameters": experiment-specific map,
//   "output":     directory for report.json and CSVs
// }
// Unknown keys are rejected.
struct ScenarioConfig {
  std::string problem_path;
  nlohmann::json profile;
  std::string experiment;
  nlohmann::json parameters;
  std::string output_dir;

  static ScenarioConfig from_json(const nlohmann::json& j);
};

struct ScenarioResult {
  int exit_code = 0;  // 0 pass, 1 assertion failure, 2 input error
  nlohmann::json report;
};

// Executes the named experiment, writes report.json and experiment CSVs
// into the output directory.
ScenarioResult run_scenario(const ScenarioConfig& config, bool verbose = false,
                            int workers = 1);

}  // namespace adsw
