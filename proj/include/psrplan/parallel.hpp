#pragma once

#include <functional>

namespace psrplan {

// Worker count: explicit value, else the PSRPLAN_THREADS environment
// variable, else hardware concurrency.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n). Results must go to per-index slots so the
// outcome does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace psrplan
