#include <iostream>

#include <CLI11.hpp>

#include "semidec/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "semidec: simulator and bound evaluator for semi-decentralized "
      "federated averaging with partial device participation"};
  app.require_subcommand(1);

  semidec::CliOptions options;
  app.add_option("--config", options.config_path,
                 "Path to the sectioned key-value config file")
      ->required();
  app.add_option("--out", options.out_dir,
                 "Directory for generated CSV/config files (default '.')");
  app.add_option("--jobs", options.jobs,
                 "Worker threads for independent runs (default 1)")
      ->check(CLI::PositiveNumber);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run the protocol and write one trace CSV per "
                  "(primitive, seed)");
  simulate->fallthrough();
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Evaluate round/communication predictions along a config axis");
  sweep->fallthrough();
  sweep->add_flag("--simulate", options.simulate,
                  "Also simulate each grid point and record final gaps");
  CLI::App* bounds = app.add_subcommand(
      "bounds", "Evaluate predicted rounds-to-target and communication for "
                "both primitives");
  bounds->fallthrough();
  CLI::App* measure = app.add_subcommand(
      "measure-het", "Estimate heterogeneity constants and emit a bounds-ready "
                     "config");
  measure->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (simulate->parsed()) return semidec::cmd_simulate(options);
  if (sweep->parsed()) return semidec::cmd_sweep(options);
  if (bounds->parsed()) return semidec::cmd_bounds(options);
  if (measure->parsed()) return semidec::cmd_measure_het(options);
  std::cerr << "error: no subcommand selected\n";
  return 2;
}
