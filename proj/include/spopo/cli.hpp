#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spopo {

enum ExitCode : int { exit_ok = 0, exit_internal = 1, exit_config = 2, exit_physics = 3, exit_io = 4 };

/// Command-line entry point. Results go to `out` when no --out directory is
/// given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace spopo
