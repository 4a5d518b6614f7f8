#pragma once

#include <cstddef>
#include <functional>

namespace fpg::cli {

/// Process exit codes: 0 success, 2 configuration or usage error, 3 runtime or
/// numerical failure (including failed verifications).
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitFailure = 3 };

/// Runs `body(i)` for i in [0, n) on up to `workers` threads. Each index is
/// handled exactly once; callers store results by index so output order does
/// not depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

/// Entry point of the `fpflow` tool.
int run(int argc, char** argv);

}  // namespace fpg::cli
