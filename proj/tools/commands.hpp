#pragma once

#include <iosfwd>

namespace mvoed::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kEstimationError = 3,
  kIoError = 4,
};

/// Parses argv, runs the selected subcommand and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvoed::cli
