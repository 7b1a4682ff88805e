#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace curatree {

// Worker cap: CURATREE_THREADS when set and > 0, otherwise the hardware
// concurrency. A value of 0 in the environment also means "auto".
size_t worker_count();

// Runs fn(shard_index, begin, end) over fixed-size shards of [0, n).
// Shard boundaries depend only on n and shard_size, never on the worker
// count, so per-shard results can be reduced in shard order to give output
// that is identical no matter how many threads ran.
size_t shard_count(uint64_t n, uint64_t shard_size);
void parallel_shards(uint64_t n, uint64_t shard_size,
                     const std::function<void(size_t, uint64_t, uint64_t)>& fn);

}  // namespace curatree
