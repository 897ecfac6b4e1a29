// geosim: run, sweep and check simulated GaussDB-Global scenarios.
//
// Exit codes: 0 clean, 1 checker violations or anomalies, 2 configuration
// or input error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "geosim/cli/runner.h"

int main(int argc, char** argv) {
  CLI::App app{"Geo-distributed transaction simulator"};
  app.require_subcommand(1);

  std::string run_config;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  CLI::App* run = app.add_subcommand("run", "Run one scenario and write reports");
  run->add_option("config", run_config, "Scenario file (TOML)")->required();
  run->add_option("--seed", seed, "Override scenario.seed");
  run->add_option("--out", out, "Output directory (default $GEOSIM_OUT_DIR)");

  std::string sweep_config;
  std::string param;
  std::string values;
  std::optional<std::string> sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "Run one scenario per value of a numeric key");
  sweep->add_option("config", sweep_config, "Scenario file (TOML)")->required();
  sweep->add_option("--param", param, "Dotted key, e.g. network.gtm_extra_delay_ms")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", sweep_out, "Output directory (default $GEOSIM_OUT_DIR)");

  std::string history_path;
  CLI::App* check = app.add_subcommand("check", "Re-run the checkers over a saved history");
  check->add_option("history", history_path, "history.ndjson")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : geosim::kExitConfigError;
  }

  if (*run) return geosim::RunCommand(run_config, seed, out, std::cout);
  if (*sweep) return geosim::SweepCommand(sweep_config, param, values, sweep_out, std::cout);
  return geosim::CheckCommand(history_path, std::cout);
}
