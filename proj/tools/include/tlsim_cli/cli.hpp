#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tlsim::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumeric = 2, kIo = 3 };

/// Runs one `tlsim` invocation. `args` excludes the program name. Products go
/// to the --out path when given, otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The command line recorded in output manifests: worker count and output
/// paths are dropped so reruns with different ones produce identical files.
std::string canonical_command(const std::vector<std::string>& args);

}  // namespace tlsim::cli
