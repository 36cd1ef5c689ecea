#pragma once

#include <ostream>

namespace irsynth::cli {

enum ExitCode : int {
  kOk = 0,
  kFailedCheck = 1,  // ran fine, but a reported check failed
  kUsage = 2,
  kIo = 3,
  kBadData = 4,
  kInternal = 5,
};

/// Entry point behind the irsynth executable. Data goes to `out`,
/// diagnostics and logs to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace irsynth::cli
