#pragma once

#include <cstddef>
#include <functional>

namespace uglad {

/// Environment variable that sets the worker count for benchmark sweeps.
inline constexpr const char* kThreadsEnv = "UGLAD_THREADS";

/// UGLAD_THREADS when set to a positive integer, otherwise the number of
/// logical cores (at least 1).
std::size_t configured_threads();

/// Runs task(0..n-1) on up to `threads` workers. Every task runs even when
/// some fail; afterwards the exception of the lowest failing index is
/// rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace uglad
