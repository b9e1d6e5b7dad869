#pragma once

#include <functional>

namespace coed {

/// Number of worker threads used for per-sample fan-out. Defaults to the
/// hardware concurrency, overridable via the COED_WORKERS environment variable
/// or set_worker_count(). A value of 1 disables threading.
int worker_count();
void set_worker_count(int n);

/// Splits [0, n) into contiguous chunks, one per worker, and runs body(begin,
/// end) on each. Chunk boundaries depend only on n and the worker count, and
/// callers are expected to write to disjoint, index-addressed slots, so results
/// are identical for any worker count.
void parallel_chunks(int n, const std::function<void(int, int)>& body);

}  // namespace coed
