#pragma once

#include <cstddef>
#include <functional>

namespace panseg {

// Thread count resolution: explicit request > PANSEG_THREADS > hardware.
// A request of 0 means "auto".
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers get
// determinism by writing results into per-index slots; the pool imposes no
// ordering of its own. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace panseg
