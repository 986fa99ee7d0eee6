#pragma once

#include <iosfwd>

namespace aos::cli {

/// Exit codes of the aos tool.
inline constexpr int kOk = 0;
inline constexpr int kStageFailure = 1;
inline constexpr int kUsage = 2;

/// Parses the command line and runs one subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aos::cli
