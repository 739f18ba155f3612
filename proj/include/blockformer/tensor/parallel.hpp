#pragma once

#include <cstddef>
#include <functional>

namespace blockformer {

/// Worker cap for tile-parallel kernels: BLOCKFORMER_THREADS if set (>= 1),
/// otherwise hardware concurrency.
std::size_t kernel_threads();

/// Runs fn(0..count-1). Tasks must write disjoint outputs; the result is then
/// independent of scheduling. Runs inline when count < min_parallel or only
/// one worker is allowed. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  std::size_t min_parallel = 32);

}  // namespace blockformer
