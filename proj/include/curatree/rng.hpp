#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <unordered_set>
#include <vector>

namespace curatree {

// Deterministic PRNG used everywhere randomness is needed. The standard
// library distributions are implementation-defined, so sampling is done on
// top of this fixed splitmix64 stream to keep artifacts byte-stable across
// compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n). Lemire's multiply-reject scheme.
  uint64_t below(uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<uint64_t>(m);
    if (low < n) {
      const uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform in (0, 1); never returns 0 so it is safe under log().
  double unit_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = unit_open();
    const double u2 = unit_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds any number of components into one substream seed. Used to derive
// per-level, per-cluster and per-batch streams that do not interfere.
inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x6a09e667f3bcc909ULL;
  for (uint64_t p : parts) {
    h = mix64(h ^ (p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  }
  return h;
}

// FNV-1a over raw bytes, folded through mix64. Keys derived from row values
// (not row order) make the k-means++ seeding permutation-invariant; the same
// hash doubles as the manifest content digest.
inline uint64_t hash_bytes(const void* data, size_t size, uint64_t seed = 0) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

// q distinct values from [0, n), uniformly, returned in ascending order.
// Robert Floyd's algorithm: O(q) draws regardless of n.
inline std::vector<uint64_t> sample_without_replacement(Rng& rng, uint64_t n, uint64_t q) {
  std::vector<uint64_t> out;
  if (q == 0) return out;
  out.reserve(q);
  std::unordered_set<uint64_t> seen;
  seen.reserve(static_cast<size_t>(q) * 2);
  for (uint64_t j = n - q; j < n; ++j) {
    const uint64_t t = rng.below(j + 1);
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace curatree
