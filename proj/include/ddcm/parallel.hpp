#pragma once

#include <cstdint>
#include <functional>

namespace ddcm {

/// Caps worker threads for kernels (and the BLAS backend). 1 guarantees bit-determinism.
void set_num_threads(int threads);
int num_threads() noexcept;

/// Splits [begin, end) into contiguous chunks, one per worker, and runs
/// fn(chunk_begin, chunk_end) on each. Every index is handled by exactly one
/// call, so kernels that write disjoint outputs per index stay deterministic.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn,
                  std::int64_t grain = 1);

}  // namespace ddcm
