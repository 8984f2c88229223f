#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hdlp {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,  ///< bad flag, config or parameter domain
  kExitData = 2,   ///< unreadable or malformed input data
};

/// Runs one subcommand; `args` excludes the program name. Reports go to
/// `out`, one-line diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdlp
