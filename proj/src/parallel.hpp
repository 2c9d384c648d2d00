#pragma once

#include <cstdint>
#include <functional>

namespace protes {

// Worker budget: PROTES_THREADS if set (clamped to >= 1), otherwise the
// hardware concurrency. Read on every call so tests can flip the env var.
int worker_count();

// Runs body(lo, hi) over a static partition of [0, n). Falls back to a
// plain loop when n is small or only one worker is available. The first
// exception thrown by any worker is rethrown after all threads join.
void parallel_for_ranges(std::int64_t n,
                         const std::function<void(std::int64_t, std::int64_t)>& body,
                         int workers = 0);

// Per-index convenience wrapper.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body,
                  int workers = 0);

}  // namespace protes
