#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dncm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Runs one `dncm` command line. Never throws; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dncm::cli
