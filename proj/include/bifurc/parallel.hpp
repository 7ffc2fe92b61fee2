#pragma once

#include <cstddef>
#include <functional>

namespace bifurc {

// Worker cap: explicit value > BIFURCLAB_THREADS env > hardware concurrency.
// Results never depend on the worker count; tasks write disjoint slots.
void set_thread_count(unsigned n);
unsigned thread_count();

// static partition of [0, count) over the configured workers
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace bifurc
