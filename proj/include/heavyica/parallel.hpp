#pragma once

#include <cstddef>
#include <functional>

namespace heavyica {

/// Worker count: HEAVYICA_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Run body(begin, end) over contiguous chunks of [0, count). Chunk
/// boundaries depend only on `count` and `grain`, never on the worker count,
/// so per-chunk partial results can be reduced in a fixed order.
void parallel_chunks(std::size_t count, std::size_t grain,
                     const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& body);

inline std::size_t chunk_count(std::size_t count, std::size_t grain) {
  return grain == 0 ? 1 : (count + grain - 1) / grain;
}

}  // namespace heavyica
