#pragma once

// Command-line entry point.
//
// Exit status: 0 success, 1 invalid input or usage, 2 numerical failure
// (non-convergence, separation, singular design). Outputs and the run
// manifest are still written when the status is 2 and a result exists.

#include <iosfwd>
#include <string>
#include <vector>

namespace irtkit::cli {

/// Runs one invocation; `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irtkit::cli
