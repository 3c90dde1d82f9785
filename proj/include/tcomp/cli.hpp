#pragma once

#include <iosfwd>

namespace tcomp {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitPartialFailure = 3,
};

/// Entry point of the `tcomp` command line tool; subcommands run, complete,
/// train-altec, calibrate and report.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tcomp
