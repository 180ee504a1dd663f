#pragma once

#include <cstdint>
#include <functional>

namespace elastic {

/// Number of workers to use: `requested` if positive, otherwise hardware
/// concurrency (at least 1).
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) across `threads` workers. Work items must be
/// independent; results should go to preallocated slots so the outcome does
/// not depend on scheduling.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace elastic
