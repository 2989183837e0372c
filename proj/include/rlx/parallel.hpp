#pragma once

#include <functional>

namespace rlx {

// Runs body(0..n-1) on up to `threads` workers over static contiguous
// chunks. Callers must write results into per-index slots only; with that
// discipline results are identical for every thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

// Thread count from an explicit request (> 0 wins), the RLX_THREADS
// environment variable, or the hardware concurrency, in that order.
int resolve_threads(int requested);

}  // namespace rlx
