#pragma once

#include <functional>

namespace lal {

// Worker count from the LAL_THREADS environment variable; unset/empty means 1.
// Rejects non-numeric or non-positive values.
int worker_count();

// Runs fn(0..n-1) across worker_count() threads with static contiguous
// chunking. Each index must write only its own output slot; under that rule
// results are identical for every worker count. Worker exceptions are
// rethrown on the calling thread.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace lal
