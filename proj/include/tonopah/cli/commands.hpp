#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tonopah::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name; the first element selects the subcommand (run, grid, verify).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* tool_version();

}  // namespace tonopah::cli
