#pragma once

#include <functional>

namespace optstab {

/// Runs fn(0..n-1), splitting across up to `threads` workers. Items must be
/// independent; results land in caller-owned slots so output order never
/// depends on scheduling. threads <= 1 runs inline.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace optstab
