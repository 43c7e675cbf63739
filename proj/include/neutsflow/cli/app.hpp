#pragma once

#include <iosfwd>

namespace neutsflow::cli {

enum ExitCode : int { kSuccess = 0, kUnexpected = 1, kUsage = 2, kData = 3, kNumerical = 4 };

/// Entry point of the `neutsflow` executable: train, forecast, eval, ablate, gradcheck, ingest.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace neutsflow::cli
