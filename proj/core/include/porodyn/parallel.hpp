// Minimal worker-pool helpers. Batch items are independent by construction;
// results must be written to pre-sized slots so reduction order is fixed and
// outputs stay deterministic regardless of scheduling.
#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace porodyn {

// Worker count: PORODYN_THREADS if set (clamped to [1, 64]), else
// hardware_concurrency, else 1.
int thread_budget();

// Runs fn(i) for i in [0, n). Serial when the budget is 1 or n is small.
// The first exception thrown by any item is rethrown after all workers join.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace porodyn
