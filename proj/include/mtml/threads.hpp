#pragma once

#include <cstddef>
#include <functional>

namespace mtml {

// Worker count for data-parallel loops. Resolved once from MTML_THREADS,
// falling back to hardware concurrency. Always >= 1.
int thread_count();
void set_thread_count(int n);

// Runs fn(begin, end) over contiguous chunks of [0, n). Every index is
// handled by exactly one worker, so per-index outputs stay bitwise identical
// regardless of the worker count. Small ranges run inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mtml
