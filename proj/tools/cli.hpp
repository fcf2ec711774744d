#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nli::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "NLI_OUTPUT_DIR";

// Entry point shared by the `nli` binary and the tests. `args` excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nli::cli
