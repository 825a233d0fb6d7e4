#pragma once

#include <functional>

namespace dmest {

// DMEST_THREADS if set to a positive integer, otherwise 1.
int env_threads();

// Runs body(0..count-1) on up to `threads` workers (<= 0 means env_threads()).
// Index i goes to worker i % workers. The first exception is rethrown after all
// workers finish.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace dmest
