#include "curatree/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace curatree {

size_t worker_count() {
  if (const char* env = std::getenv("CURATREE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

size_t shard_count(uint64_t n, uint64_t shard_size) {
  if (n == 0) return 0;
  return static_cast<size_t>((n + shard_size - 1) / shard_size);
}

void parallel_shards(uint64_t n, uint64_t shard_size,
                     const std::function<void(size_t, uint64_t, uint64_t)>& fn) {
  const size_t shards = shard_count(n, shard_size);
  if (shards == 0) return;

  const size_t workers = std::min(worker_count(), shards);
  if (workers <= 1) {
    for (size_t s = 0; s < shards; ++s) {
      const uint64_t begin = static_cast<uint64_t>(s) * shard_size;
      fn(s, begin, std::min(begin + shard_size, n));
    }
    return;
  }

  std::atomic<size_t> next{0};
  auto run = [&] {
    for (;;) {
      const size_t s = next.fetch_add(1, std::memory_order_relaxed);
      if (s >= shards) break;
      const uint64_t begin = static_cast<uint64_t>(s) * shard_size;
      fn(s, begin, std::min(begin + shard_size, n));
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

}  // namespace curatree
