#pragma once

#include <iosfwd>

namespace cote::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputError = 2,
  kBudgetAbort = 3,
  kFaithfulnessViolation = 4,
};

/// Entry point of the `cote` tool (`compress` and `eval` subcommands).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cote::cli
