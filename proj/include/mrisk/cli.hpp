#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mrisk {

/// Exit codes: 0 success, 1 validation failure, 2 input error, 3 invariant
/// breach.
enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitInput = 2, kExitInvariant = 3 };

/// Entry point of the `mrisk` tool; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrisk
