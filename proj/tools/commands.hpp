#pragma once

#include <iosfwd>

namespace dualview::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigInvalid = 2, kThresholdsViolated = 3 };

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualview::cli
