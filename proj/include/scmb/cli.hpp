#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scmb {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIncompatible = 1;
inline constexpr int kExitError = 2;

// Runs one `scmb` invocation; args excludes the program name. Reports go to
// `out` (or the -o file), diagnostics to `err`.
int runCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scmb
