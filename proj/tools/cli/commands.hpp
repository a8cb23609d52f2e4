#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dwnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `dwnet` tool. args excludes the program name.
/// Returns the process exit code: 0 success, 1 runtime failure, 2 usage or
/// config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dwnet::cli
