#pragma once

#include <cstddef>
#include <functional>

namespace qd {

/// Worker count: QD_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

/// Override for the current process (0 restores the environment default).
void set_worker_count(int n);

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each,
/// one chunk per worker. Chunk boundaries depend only on n and the worker
/// count; callers that reduce must do so per chunk and combine in order.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1024);

}  // namespace qd
