#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evtrack::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kCheckFailed = 3,
};

/// Runs the command line `args` (without the program name). Normal output goes to `out`,
/// diagnostics and --verbose progress to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker cap from EVTRACK_THREADS (unset or invalid: hardware concurrency), at least 1 and
/// at most `tasks`.
unsigned worker_count(std::size_t tasks);

}  // namespace evtrack::cli
