#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdcount::cli {

enum ExitCode : int {
  kOk = 0,
  kDataError = 1,
  kUsageError = 2,
  kIoError = 3,
  kModelIncompatible = 4,
  kConvergenceWarning = 5,
};

/// Entry point behind the `crowdcount` executable. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdcount::cli
