#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbfmarl::cli {

/// Exit statuses besides 0 and the usage error of the argument parser.
enum ExitCode : int { kOk = 0, kBadConfig = 2, kMissingFile = 3, kNumerical = 4 };

/// Runs one subcommand (train, eval, sweep, filter-analyze, plot). Failures
/// print a single JSON line {"error": ..., "exit": ..., "message": ...} to
/// `err` and return the matching exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbfmarl::cli
