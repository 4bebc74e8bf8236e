#pragma once

#include <cstddef>
#include <functional>

namespace fdot {

// Process-wide default worker count (hardware concurrency unless overridden,
// e.g. by the CLI --threads flag).
int default_threads();
void set_default_threads(int n);

// Runs fn(i) for i in [0, n). Work is split into fixed-size chunks handed to
// a transient thread pool; callers must write to disjoint output slots, which
// keeps results identical for any worker count. threads <= 0 uses the default.
void parallel_for(size_t n, const std::function<void(size_t)>& fn, int threads = 0);

}  // namespace fdot
