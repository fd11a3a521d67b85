#pragma once

#include <functional>
#include <vector>

namespace srtube {

// 0 means "use the hardware concurrency".
int resolve_threads(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots by the caller. If any call throws, the exception
// of the lowest failing index is rethrown, so errors do not depend on
// scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

// Compensated (Neumaier) sum in index order.
double stable_sum(const std::vector<double>& v);

}  // namespace srtube
