#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "adsw/io.hpp"
#include "adsw/scenario.hpp"

namespace {

int worker_count() {
  if (const char* env = std::getenv("ADSWITCH_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adiabatic switching toolkit for degenerate levels"};
  app.require_subcommand(1);

  std::string config_path, out_dir, problem_path;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "Execute a scenario config");
  run->add_option("--config", config_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Override the output directory");
  run->add_flag("--verbose", verbose, "Print the report to stderr");

  auto* validate = app.add_subcommand("validate", "Load and validate a problem");
  validate->add_option("--problem", problem_path, "Problem JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto config = adsw::ScenarioConfig::from_json(adsw::load_json(config_path));
      if (!out_dir.empty()) config.output_dir = out_dir;
      const auto result = adsw::run_scenario(config, verbose, worker_count());
      if (result.exit_code != 0 && result.report.contains("error")) {
        std::cerr << "error: " << result.report["error"].get<std::string>()
                  << "\n";
      }
      return result.exit_code;
    }
    if (validate->parsed()) {
      const auto problem = adsw::load_problem(problem_path);
      std::cout << "dim " << problem.dim() << ", E0 = "
                << adsw::format_real(problem.ground_energy()) << ", N = "
                << problem.degeneracy() << "\n";
      return 0;
    }
  } catch (const adsw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
