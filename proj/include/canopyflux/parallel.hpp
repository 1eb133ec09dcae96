#pragma once

#include <cstddef>
#include <functional>

namespace canopyflux {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Bodies must write only to their own slot; the first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_thread_count(unsigned requested);

}  // namespace canopyflux
