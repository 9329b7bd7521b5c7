#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dstack {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

// Entry point of the `dstack` tool; `args` excludes the program name.
// Machine-readable results go to `out` as JSON, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dstack
