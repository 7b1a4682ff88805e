#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately re-derive results by brute force (exhaustive scans, direct
// recounts) and must stay independent of the library code paths they check.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "curatree/embeddings.hpp"
#include "curatree/hierarchy.hpp"
#include "curatree/rng.hpp"

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("curatree_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Exhaustive-scan oracle for the balanced allocation: the minimum of
// |target - sum_i min(m, s_i)| over every m in {0..target}.
inline uint64_t allocation_scan_min(uint64_t target, std::span<const uint64_t> sizes) {
  uint64_t best = UINT64_MAX;
  for (uint64_t m = 0; m <= target; ++m) {
    uint64_t f = 0;
    for (uint64_t s : sizes) f += std::min(m, s);
    const uint64_t d = f > target ? f - target : target - f;
    best = std::min(best, d);
  }
  return best;
}

// Brute-force nearest-centroid oracle (same float arithmetic as the spec'd
// distance, plain double loop over candidates).
inline uint32_t nearest_centroid_oracle(std::span<const float> row,
                                        std::span<const float> centroids, uint32_t k) {
  const uint32_t dim = static_cast<uint32_t>(row.size());
  uint32_t best = 0;
  float best_d = 0.0f;
  for (uint32_t c = 0; c < k; ++c) {
    float d = 0.0f;
    for (uint32_t j = 0; j < dim; ++j) {
      const float diff = row[j] - centroids[c * dim + j];
      d += diff * diff;
    }
    if (c == 0 || d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Hand-built tree: bottom cluster sizes plus their parents per level above.
// parents_per_level[0] maps level-1 clusters to level-2 clusters, and so on.
// Rows are assigned to bottom clusters in consecutive blocks.
inline curatree::ClusterTree make_tree(
    const std::vector<uint64_t>& bottom_sizes,
    const std::vector<std::vector<uint32_t>>& parents_per_level) {
  const uint32_t depth = static_cast<uint32_t>(parents_per_level.size()) + 1;
  std::vector<curatree::TreeLevel> levels(depth);

  levels[0].cluster_count = static_cast<uint32_t>(bottom_sizes.size());
  levels[0].sizes = bottom_sizes;

  std::vector<uint32_t> base;
  for (uint32_t c = 0; c < bottom_sizes.size(); ++c) {
    base.insert(base.end(), bottom_sizes[c], c);
  }

  for (uint32_t l = 0; l + 1 < depth; ++l) {
    levels[l].parent = parents_per_level[l];
    const uint32_t parents =
        *std::max_element(parents_per_level[l].begin(), parents_per_level[l].end()) + 1;
    levels[l + 1].cluster_count = parents;
    levels[l + 1].sizes.assign(parents, 0);
    for (uint32_t c = 0; c < levels[l].cluster_count; ++c) {
      levels[l + 1].sizes[parents_per_level[l][c]] += levels[l].sizes[c];
    }
  }
  return curatree::ClusterTree(std::move(levels), std::move(base));
}

// Flat two-level tree: one bottom cluster per top cluster.
inline curatree::ClusterTree make_flat_tree(const std::vector<uint64_t>& sizes) {
  std::vector<uint32_t> identity(sizes.size());
  for (uint32_t c = 0; c < sizes.size(); ++c) identity[c] = c;
  return make_tree(sizes, {identity});
}

// Gaussian blobs with the generating labels, one block per center.
struct Blobs {
  curatree::EmbeddingMatrix matrix;
  std::vector<uint32_t> labels;
};

inline Blobs make_blobs(const std::vector<std::vector<float>>& centers, uint64_t per_center,
                        float sigma, uint64_t seed) {
  Blobs out;
  const uint32_t dim = static_cast<uint32_t>(centers[0].size());
  out.matrix.dim = dim;
  out.matrix.count = per_center * centers.size();
  out.matrix.data.reserve(out.matrix.count * dim);
  curatree::Rng rng(seed);
  for (uint32_t c = 0; c < centers.size(); ++c) {
    for (uint64_t i = 0; i < per_center; ++i) {
      for (uint32_t j = 0; j < dim; ++j) {
        out.matrix.data.push_back(centers[c][j] +
                                  sigma * static_cast<float>(rng.gaussian()));
      }
      out.labels.push_back(c);
    }
  }
  return out;
}

}  // namespace testutil
