#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phasessl {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `phasessl` tool. `args` excludes the program name.
/// Subcommands: synth, enhance, split, ssl, eval, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace phasessl
