#pragma once

#include <cstddef>
#include <functional>

namespace dynlap {

// Process-wide worker count used by the row-parallel assembly loops.
// Results never depend on this value; each index writes only its own slot.
void set_thread_count(int n);
int thread_count();

// Calls body(i) for i in [0, n), split into contiguous blocks across threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dynlap
