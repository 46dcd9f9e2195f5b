#ifndef RLAB_CLI_APP_HPP
#define RLAB_CLI_APP_HPP

#include <ostream>
#include <string>
#include <vector>

namespace rlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point shared by the rlab binary and the in-process tests.
/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rlab::cli

#endif  // RLAB_CLI_APP_HPP
