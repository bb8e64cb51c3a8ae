#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (argv without the program name). Returns the
/// process exit code: 0 ok, 1 runtime or property failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clml::cli
