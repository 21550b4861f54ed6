#pragma once

#include <cstddef>
#include <functional>

namespace hopfstab {

// HOPFSTAB_THREADS, clamped to [1, hardware threads]; 1 when unset or unparsable.
int thread_budget();

// Runs fn(0..count-1) on up to thread_budget() threads. The first exception (lowest index) is
// rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace hopfstab
