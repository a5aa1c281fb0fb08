#pragma once

#include <ostream>

namespace rlq::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kSolver = 2, kVerification = 3 };

/// Runs one subcommand. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rlq::cli
