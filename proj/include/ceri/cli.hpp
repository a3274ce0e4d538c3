#ifndef CERI_CLI_HPP
#define CERI_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ceri {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitVerification = 2,
  kExitNotConverged = 3,
};

struct CommandContext {
  /// Relative file arguments resolve against this directory (empty: cwd).
  std::filesystem::path base_dir;
};

/// Runs one command line (without the program name), writing the JSON report
/// to `out` and diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const CommandContext& context = {});

}  // namespace ceri

#endif  // CERI_CLI_HPP
