#pragma once

#include <string>
#include <vector>

namespace gfmr {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitShape = 2,
    kExitRank = 3,
    kExitNotConverged = 4,
    kExitIo = 5,
};

// Entry point of the gfmr tool; args[0] is the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace gfmr
