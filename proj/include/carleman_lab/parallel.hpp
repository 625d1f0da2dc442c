#pragma once

#include <cstddef>
#include <functional>

namespace carleman_lab {

// Worker count: CARLEMAN_LAB_THREADS if set (>= 1), else hardware concurrency.
unsigned thread_count();

// Runs body(i) for i in [0, n). Iterations must write disjoint outputs; the
// partition into contiguous chunks is fixed, so results do not depend on timing.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace carleman_lab
