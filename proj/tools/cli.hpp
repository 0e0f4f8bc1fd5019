#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecfc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitIo = 4;

// Runs one command line (args[0] is the program name). Never throws; errors
// become a one-line diagnostic on `err` and a nonzero exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecfc::cli
