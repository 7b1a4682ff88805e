#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "curatree/hierarchy.hpp"

namespace curatree {

// Quota assignment at one tree node: the balance parameter n gives every
// child min(n, size) samples, with n chosen so the total lands as close to
// the target as the sizes allow.
struct AllocationPlan {
  uint32_t level = 0;
  uint64_t cluster = 0;
  uint64_t target = 0;
  std::vector<uint64_t> children_sizes;
  uint64_t n = 0;
  std::vector<uint64_t> quotas;  // min(n, size) per child
  uint64_t achieved = 0;         // sum of quotas
};

// Binary search for n in {0..target} minimizing |target - sum_i min(n, s_i)|.
// f(m) = sum min(m, s_i) is non-decreasing, so the optimum sits at the
// crossing point; when two n tie, the smaller wins (never overshoot a budget
// silently when undershooting costs the same).
AllocationPlan allocate(uint64_t target, std::span<const uint64_t> sizes);

struct SubsetTarget {
  static SubsetTarget size(uint64_t n) { return {n, std::nullopt}; }
  static SubsetTarget fraction(double f) { return {0, f}; }

  uint64_t count = 0;
  std::optional<double> frac;

  // Fraction converts by rounding half-up, as documented.
  uint64_t resolve(uint64_t total) const;
};

struct CuratedSubset {
  std::vector<uint64_t> row_indices;      // unique, ascending
  std::vector<uint32_t> bottom_cluster;   // provenance, aligned with row_indices
  uint32_t sampling_level = 0;
  uint64_t target = 0;
  uint64_t achieved = 0;  // == row_indices.size()
  uint64_t seed = 0;
};

// Top-down balanced sampling: allocate at the chosen level, re-allocate each
// cluster's quota over its children, and draw uniformly without replacement
// from bottom-cluster members through per-cluster substreams of `seed`.
// Sibling quotas are allocated independently; spare capacity in one branch
// never absorbs another branch's shortfall.
//
// exact=false returns whatever the allocation achieved. exact=true trims an
// overshoot back to the target by removing samples one at a time from the
// sampling-level cluster with the largest realized draw (ties to the lowest
// cluster id; inside the cluster, from its most-drawn bottom cluster, highest
// row index first). A shortfall is returned as-is in both modes.
CuratedSubset sample_subset(const ClusterTree& tree, uint32_t level, SubsetTarget target,
                            uint64_t seed, bool exact = false);

// CSS1 container. Row indices are u32 unless the wide flag is set in the
// header (count beyond 32 bits).
void subset_save(const CuratedSubset& subset, const std::filesystem::path& path);
CuratedSubset subset_load(const std::filesystem::path& path,
                          std::optional<uint64_t> expect_count = std::nullopt);

}  // namespace curatree
