// Batch experiment runner: `fwl run config.json` executes one scenario and
// writes CSV + JSON reports; `fwl list` prints the scenario table.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fwl/errors.hpp"
#include "fwl/parallel.hpp"
#include "fwl/scenarios.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for weighted Fock-space operator theory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  double grid_R = 0.0, grid_h = 0.0;
  bool has_R = false, has_h = false;

  CLI::App* run = app.add_subcommand("run", "run one scenario from a JSON config");
  run->add_option("config", config_path, "path to the scenario config")->required();
  run->add_option("--out", out_dir, "output directory for CSV/JSON reports");
  run->add_option("--threads", threads, "worker thread count (default: all cores)");
  run->add_option("--grid-R", grid_R, "override the grid truncation radius")
      ->each([&](const std::string&) { has_R = true; });
  run->add_option("--grid-h", grid_h, "override the grid spacing")
      ->each([&](const std::string&) { has_h = true; });

  CLI::App* list = app.add_subcommand("list", "list scenarios and what each one verifies");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& info : fwl::list_scenarios()) {
      std::cout << info.name << "\t" << info.required_keys << "\t" << info.statement << "\n";
    }
    return 0;
  }

  try {
    if (threads > 0) fwl::set_thread_count(threads);
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config '" << config_path << "'\n";
      return 1;
    }
    nlohmann::json config;
    try {
      config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 1;
    }

    fwl::RunOptions opt;
    opt.out_dir = out_dir;
    if (has_R) opt.grid_R = grid_R;
    if (has_h) opt.grid_h = grid_h;

    fwl::RunReport rep = fwl::run_scenario(config, opt);
    std::cout << rep.scenario << ": " << (rep.pass ? "pass" : "FAIL") << " ("
              << rep.wall_ms << " ms)\n"
              << "  csv:  " << rep.csv_path << "\n"
              << "  json: " << rep.json_path << "\n";
    return rep.pass ? 0 : 2;
  } catch (const fwl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
