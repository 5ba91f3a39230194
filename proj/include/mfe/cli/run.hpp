#pragma once

#include <string>
#include <vector>

namespace mfe::cli {

enum ExitCode { kOk = 0, kRuntimeError = 1, kConfigError = 2, kSolverFailure = 3 };

/// Entry point of the command line tool:
///   mfe <solve|envelope|duality|alpha|mt|sweep-beta-inf|report> [--config path]
///       [--beta b] [--grid n] [--out dir]
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace mfe::cli
