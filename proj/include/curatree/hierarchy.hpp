#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "curatree/embeddings.hpp"
#include "curatree/kmeans.hpp"

namespace curatree {

// level_counts runs bottom (level 1) to top (level D), strictly decreasing,
// D >= 2. The k-means template's seed is combined with the level index so
// levels do not share initializations.
struct TreeConfig {
  std::vector<uint32_t> level_counts;
  KMeansConfig kmeans;
};

void validate_tree_config(const TreeConfig& config, uint64_t count);

struct TreeLevel {
  uint32_t cluster_count = 0;
  uint32_t dim = 0;                 // 0 when centroids were stripped on save
  std::vector<float> centroids;     // cluster_count * dim
  std::vector<uint32_t> parent;     // cluster -> parent at level+1; empty at the top
  std::vector<uint64_t> sizes;      // data rows reachable from each cluster
};

// Multi-level k-means hierarchy: level 1 clusters the data rows, each level
// above clusters the centroids of the level below. Immutable once built;
// all queries are safe from concurrent readers.
class ClusterTree {
 public:
  // Validates parent ranges, per-level size aggregation and full coverage,
  // then builds the membership index. Throws corrupt_section on any
  // structural inconsistency (shared by load_tree and hand-built fixtures).
  ClusterTree(std::vector<TreeLevel> levels, std::vector<uint32_t> base_assignment);

  uint32_t depth() const { return static_cast<uint32_t>(levels_.size()); }
  uint64_t count() const { return base_assignment_.size(); }
  bool has_centroids() const;

  // Levels are 1-based, matching the bottom-up convention used everywhere.
  const TreeLevel& level(uint32_t level_index) const;
  const std::vector<uint32_t>& base_assignment() const { return base_assignment_; }

  // Sorted row indices of all data rows reachable from the given cluster.
  std::vector<uint64_t> members_of(uint32_t level_index, uint64_t cluster) const;

  // Rows of a bottom cluster as a view into the membership index (ascending).
  std::span<const uint64_t> base_members(uint32_t cluster) const;

  // Child clusters (at level_index-1) of a cluster, ascending ids.
  std::span<const uint32_t> children_of(uint32_t level_index, uint64_t cluster) const;

  // Ancestor of a bottom (level-1) cluster at the given level.
  uint32_t ancestor_of_base(uint32_t base_cluster, uint32_t level_index) const;

 private:
  std::vector<TreeLevel> levels_;            // [0] = level 1
  std::vector<uint32_t> base_assignment_;    // row -> level-1 cluster
  std::vector<uint64_t> member_offsets_;     // CSR over base clusters
  std::vector<uint64_t> member_rows_;
  // children CSR per level boundary: child_offsets_[l] indexes children of
  // level l+2 clusters (i.e. the parent side of levels_[l]).
  std::vector<std::vector<uint64_t>> child_offsets_;
  std::vector<std::vector<uint32_t>> child_ids_;

  void check_level_index(uint32_t level_index) const;
};

// Bottom-up construction: k-means over all rows at level 1, then k-means
// over the previous level's centroids, with parents given by the fit's
// nearest-centroid assignment. Deterministic given (data, config).
ClusterTree build_tree(const EmbeddingMatrix& data, const TreeConfig& config);

// HCT1 container, versioned and length-prefixed per section so sampling-only
// readers can skip straight past centroid payloads. include_centroids=false
// writes dim=0 sections (sizes, parents and the base assignment are all a
// sampler needs).
void save_tree(const ClusterTree& tree, const std::filesystem::path& path,
               bool include_centroids = true);
ClusterTree load_tree(const std::filesystem::path& path);

}  // namespace curatree
