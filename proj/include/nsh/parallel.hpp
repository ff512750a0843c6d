#pragma once

#include <cstddef>
#include <functional>

namespace nsh {

/// Worker count used by batch evaluation. Defaults to NSH_THREADS when set, else the
/// hardware concurrency. Results never depend on this value.
int thread_count();
void set_thread_count(int threads);

/// Keeps large training buffers in the heap instead of returning them to the OS after
/// every iteration (glibc only; a no-op elsewhere). Call once at program start.
void retain_heap_buffers();

/// Runs task(i) for i in [0, n); tasks must write disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace nsh
