#pragma once

#include <iosfwd>

namespace jdiag::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitMaxIters = 3,
  kExitLineSearch = 4,
  kExitNumeric = 5,
};

/// Parses argv, runs one subcommand, writes the JSON report to `out` and
/// diagnostics to `err`. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace jdiag::cli
