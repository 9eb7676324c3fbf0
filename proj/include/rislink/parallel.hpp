#pragma once

#include <cstddef>
#include <functional>

namespace rislink {

/// Run fn(0) .. fn(count - 1) on up to `threads` workers. Each index runs
/// exactly once; the first exception thrown is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Worker cap from RISLINK_THREADS, or `fallback` when unset or invalid.
unsigned threads_from_env(unsigned fallback = 1);

}  // namespace rislink
