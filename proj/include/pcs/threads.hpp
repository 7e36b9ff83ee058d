#pragma once

#include <cstddef>
#include <functional>

namespace pcs {

// Resolves the execution width: explicit request > PCS_THREADS env variable >
// hardware concurrency. Always at least 1.
int thread_count(int requested);

// Runs fn(i) for i in [0,n) on `threads` workers over contiguous index blocks.
// Callers must write results into per-index slots; any reduction happens
// sequentially afterwards so outputs do not depend on the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace pcs
