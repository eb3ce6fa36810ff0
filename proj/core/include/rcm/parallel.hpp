#pragma once

#include <cstddef>
#include <functional>

namespace rcm {

// Runs body(i) for i in [0, count) on up to `threads` worker threads. Work is
// handed out by an atomic counter; callers write results into slot i so the
// outcome does not depend on scheduling. The first exception thrown by any
// body is rethrown after all workers have joined.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace rcm
