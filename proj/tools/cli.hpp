#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relbn::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidCase = 1,
  kConfigError = 2,
  kSolverFailure = 3,
  kFingerprintMismatch = 4,
  kAllBusesPruned = 5,
  kContradictoryEvidence = 6,
  kBusPruned = 7,
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relbn::cli
