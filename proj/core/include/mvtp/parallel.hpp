#pragma once

#include <cstddef>
#include <functional>

namespace mvtp {

/// Worker count for internal parallel loops: MVTP_THREADS if set and
/// positive, otherwise the hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations are distributed over
/// thread_count() workers; results must be written by index so output order
/// never depends on scheduling. The exception thrown by the lowest failing
/// index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mvtp
