#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace smallball::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAssertion = 2;

std::string_view version();

/// Runs one subcommand. `args` excludes the program name. A `--config FILE`
/// argument is expanded in place: its key=value lines become long options,
/// and explicit arguments after it take precedence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a flat key=value config ('#' comments, blank lines ignored).
std::vector<std::pair<std::string, std::string>> read_config(std::string_view text);

}  // namespace smallball::cli
