#pragma once

#include <cstddef>
#include <functional>

namespace nitsche {

/// Worker count hint from NITSCHE_THREADS (default 1, clamped to [1, 64]).
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks must write
/// to disjoint storage; callers combine results in index order afterwards so
/// the outcome does not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nitsche
