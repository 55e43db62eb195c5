#pragma once

// Command-line front end. Every subcommand is a thin wrapper over a library
// call; machine-readable results go to `out` as CSV, human-readable
// summaries and diagnostics to `err`.

#include <iosfwd>
#include <string>
#include <vector>

namespace hypgw::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace hypgw::cli
