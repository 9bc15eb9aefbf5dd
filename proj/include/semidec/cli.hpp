#pragma once

#include <string>

namespace semidec {

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  bool simulate = false;  // sweep only: also run matching simulations
};

// Subcommand entry points; each returns a process exit code:
//   0 success, 2 configuration error, 3 numerical failure, 4 request outside
//   the theory's domain.
int cmd_simulate(const CliOptions& options);
int cmd_sweep(const CliOptions& options);
int cmd_bounds(const CliOptions& options);
int cmd_measure_het(const CliOptions& options);

}  // namespace semidec
