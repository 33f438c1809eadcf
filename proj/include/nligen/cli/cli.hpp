#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nligen {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Runs the nligen command line. args excludes the program name.
// Subcommands: train-classifier, train-generator, generate, filter,
// evaluate, discriminate, pipeline. `--config file.json` supplies option
// values (top-level keys, or keys under a section named after the
// subcommand); flags given on the command line win.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace nligen
