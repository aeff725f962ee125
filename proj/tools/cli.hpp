// Entry point of the krigcv command-line tool, callable in-process.

#ifndef KRIGCV_TOOLS_CLI_HPP_
#define KRIGCV_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace krigcv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace krigcv::cli

#endif  // KRIGCV_TOOLS_CLI_HPP_
