#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpcjoin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand; args excludes the program name. Reports go to `out`
// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mpcjoin::cli
