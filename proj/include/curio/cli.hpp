#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace curio {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation failure or failed run
inline constexpr int kExitConfigError = 2;

/// Parses "0,1,2", "0-4" or a mix; throws ConfigError.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Entry point behind the `curio` binary. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curio
