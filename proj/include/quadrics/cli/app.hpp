#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace quadrics::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 1, kNumericalFailure = 2 };

/// Entry point of the `quadrics` tool: generate, fit, parse, eval, selfcheck.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quadrics::cli
