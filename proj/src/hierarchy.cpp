#include "curatree/hierarchy.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "curatree/error.hpp"

namespace curatree {

namespace {

constexpr char kMagic[4] = {'H', 'C', 'T', '1'};
constexpr uint32_t kVersion = 1;

std::string level_name(uint32_t level_index) {
  return "level " + std::to_string(level_index);
}

}  // namespace

void validate_tree_config(const TreeConfig& config, uint64_t count) {
  const auto& lc = config.level_counts;
  if (lc.size() < 2) {
    fail(errc::invalid_config, "tree needs at least 2 levels, got " + std::to_string(lc.size()));
  }
  for (size_t i = 0; i < lc.size(); ++i) {
    if (lc[i] == 0) fail(errc::invalid_config, "level counts must be positive");
    if (i > 0 && lc[i] >= lc[i - 1]) {
      fail(errc::invalid_config, "level counts must be strictly decreasing bottom to top");
    }
  }
  if (lc[0] > count) {
    fail(errc::too_few_rows, "bottom level wants " + std::to_string(lc[0]) +
                                 " clusters but data has " + std::to_string(count) + " rows");
  }
}

ClusterTree::ClusterTree(std::vector<TreeLevel> levels, std::vector<uint32_t> base_assignment)
    : levels_(std::move(levels)), base_assignment_(std::move(base_assignment)) {
  if (levels_.size() < 2) fail(errc::corrupt_section, "tree depth below 2");
  const uint64_t count = base_assignment_.size();
  const uint32_t depth = static_cast<uint32_t>(levels_.size());

  for (uint32_t l = 0; l < depth; ++l) {
    const TreeLevel& lev = levels_[l];
    if (lev.cluster_count == 0) fail(errc::corrupt_section, level_name(l + 1) + " has no clusters");
    if (lev.sizes.size() != lev.cluster_count) {
      fail(errc::corrupt_section, level_name(l + 1) + " sizes array inconsistent");
    }
    if (lev.dim != 0 && lev.centroids.size() != static_cast<size_t>(lev.cluster_count) * lev.dim) {
      fail(errc::corrupt_section, level_name(l + 1) + " centroid payload inconsistent");
    }
    const bool top = l + 1 == depth;
    if (top != lev.parent.empty()) {
      fail(errc::corrupt_section, level_name(l + 1) + " parent array presence wrong");
    }
    if (!top) {
      if (lev.parent.size() != lev.cluster_count) {
        fail(errc::corrupt_section, level_name(l + 1) + " parent array inconsistent");
      }
      for (uint32_t p : lev.parent) {
        if (p >= levels_[l + 1].cluster_count) {
          fail(errc::corrupt_section, level_name(l + 1) + " parent id out of range");
        }
      }
    }
  }

  // Recompute sizes from the base assignment upward and insist they match.
  std::vector<uint64_t> expect(levels_[0].cluster_count, 0);
  for (uint32_t c : base_assignment_) {
    if (c >= levels_[0].cluster_count) {
      fail(errc::corrupt_section, "base assignment references missing bottom cluster");
    }
    expect[c]++;
  }
  for (uint32_t l = 0; l < depth; ++l) {
    uint64_t total = 0;
    for (uint32_t c = 0; c < levels_[l].cluster_count; ++c) {
      if (expect[c] == 0) {
        fail(errc::corrupt_section, level_name(l + 1) + " cluster " + std::to_string(c) +
                                        " has no reachable rows");
      }
      if (expect[c] != levels_[l].sizes[c]) {
        fail(errc::corrupt_section, level_name(l + 1) + " sizes do not aggregate");
      }
      total += expect[c];
    }
    if (total != count) fail(errc::corrupt_section, level_name(l + 1) + " sizes do not sum to count");
    if (l + 1 < depth) {
      std::vector<uint64_t> up(levels_[l + 1].cluster_count, 0);
      for (uint32_t c = 0; c < levels_[l].cluster_count; ++c) {
        up[levels_[l].parent[c]] += expect[c];
      }
      expect = std::move(up);
    }
  }

  // Membership index: counting sort of rows by bottom cluster.
  const uint32_t bottom = levels_[0].cluster_count;
  member_offsets_.assign(bottom + 1, 0);
  for (uint32_t c : base_assignment_) member_offsets_[c + 1]++;
  std::partial_sum(member_offsets_.begin(), member_offsets_.end(), member_offsets_.begin());
  member_rows_.resize(count);
  std::vector<uint64_t> cursor(member_offsets_.begin(), member_offsets_.end() - 1);
  for (uint64_t r = 0; r < count; ++r) {
    member_rows_[cursor[base_assignment_[r]]++] = r;
  }

  // Children CSR per level boundary.
  child_offsets_.resize(depth - 1);
  child_ids_.resize(depth - 1);
  for (uint32_t l = 0; l + 1 < depth; ++l) {
    const uint32_t parents = levels_[l + 1].cluster_count;
    auto& offsets = child_offsets_[l];
    auto& ids = child_ids_[l];
    offsets.assign(parents + 1, 0);
    for (uint32_t p : levels_[l].parent) offsets[p + 1]++;
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    ids.resize(levels_[l].cluster_count);
    std::vector<uint64_t> cur(offsets.begin(), offsets.end() - 1);
    for (uint32_t c = 0; c < levels_[l].cluster_count; ++c) {
      ids[cur[levels_[l].parent[c]]++] = c;
    }
  }
}

void ClusterTree::check_level_index(uint32_t level_index) const {
  if (level_index < 1 || level_index > depth()) {
    fail(errc::index_out_of_range, "level " + std::to_string(level_index) +
                                       " outside [1, " + std::to_string(depth()) + "]");
  }
}

const TreeLevel& ClusterTree::level(uint32_t level_index) const {
  check_level_index(level_index);
  return levels_[level_index - 1];
}

bool ClusterTree::has_centroids() const {
  for (const auto& lev : levels_) {
    if (lev.dim == 0) return false;
  }
  return true;
}

std::span<const uint64_t> ClusterTree::base_members(uint32_t cluster) const {
  if (cluster >= levels_[0].cluster_count) {
    fail(errc::index_out_of_range, "bottom cluster " + std::to_string(cluster) + " out of range");
  }
  return {member_rows_.data() + member_offsets_[cluster],
          member_rows_.data() + member_offsets_[cluster + 1]};
}

std::span<const uint32_t> ClusterTree::children_of(uint32_t level_index, uint64_t cluster) const {
  check_level_index(level_index);
  if (level_index < 2) fail(errc::index_out_of_range, "level 1 clusters have no children");
  if (cluster >= levels_[level_index - 1].cluster_count) {
    fail(errc::index_out_of_range, "cluster " + std::to_string(cluster) + " out of range at " +
                                       level_name(level_index));
  }
  const auto& offsets = child_offsets_[level_index - 2];
  const auto& ids = child_ids_[level_index - 2];
  return {ids.data() + offsets[cluster], ids.data() + offsets[cluster + 1]};
}

uint32_t ClusterTree::ancestor_of_base(uint32_t base_cluster, uint32_t level_index) const {
  check_level_index(level_index);
  if (base_cluster >= levels_[0].cluster_count) {
    fail(errc::index_out_of_range, "bottom cluster " + std::to_string(base_cluster) + " out of range");
  }
  uint32_t c = base_cluster;
  for (uint32_t l = 1; l < level_index; ++l) c = levels_[l - 1].parent[c];
  return c;
}

std::vector<uint64_t> ClusterTree::members_of(uint32_t level_index, uint64_t cluster) const {
  check_level_index(level_index);
  if (cluster >= levels_[level_index - 1].cluster_count) {
    fail(errc::index_out_of_range, "cluster " + std::to_string(cluster) + " out of range at " +
                                       level_name(level_index));
  }
  // Walk down to the bottom clusters under this node, then gather rows.
  std::vector<uint32_t> frontier{static_cast<uint32_t>(cluster)};
  for (uint32_t l = level_index; l > 1; --l) {
    std::vector<uint32_t> next;
    for (uint32_t c : frontier) {
      const auto kids = children_of(l, c);
      next.insert(next.end(), kids.begin(), kids.end());
    }
    frontier = std::move(next);
  }
  std::vector<uint64_t> rows;
  rows.reserve(levels_[level_index - 1].sizes[cluster]);
  for (uint32_t c : frontier) {
    const auto span = base_members(c);
    rows.insert(rows.end(), span.begin(), span.end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

ClusterTree build_tree(const EmbeddingMatrix& data, const TreeConfig& config) {
  validate_tree_config(config, data.count);
  const uint32_t depth = static_cast<uint32_t>(config.level_counts.size());

  std::vector<TreeLevel> levels(depth);
  std::vector<uint32_t> base_assignment;

  std::vector<float> prev_centroids;
  uint64_t prev_count = 0;

  for (uint32_t l = 1; l <= depth; ++l) {
    KMeansConfig kc = config.kmeans;
    kc.k = config.level_counts[l - 1];
    kc.seed = config.kmeans.seed ^ static_cast<uint64_t>(l);

    KMeansResult fit = (l == 1)
                           ? kmeans_fit(data, kc)
                           : kmeans_fit(std::span<const float>(prev_centroids), prev_count,
                                        data.dim, kc);

    TreeLevel& lev = levels[l - 1];
    lev.cluster_count = kc.k;
    lev.dim = data.dim;
    lev.centroids = fit.centroids;

    if (l == 1) {
      base_assignment = fit.assignment;
    } else {
      levels[l - 2].parent = fit.assignment;
    }
    prev_centroids = std::move(fit.centroids);
    prev_count = kc.k;
  }

  // Upward size aggregation.
  levels[0].sizes.assign(levels[0].cluster_count, 0);
  for (uint32_t c : base_assignment) levels[0].sizes[c]++;
  for (uint32_t l = 1; l < depth; ++l) {
    levels[l].sizes.assign(levels[l].cluster_count, 0);
    for (uint32_t c = 0; c < levels[l - 1].cluster_count; ++c) {
      levels[l].sizes[levels[l - 1].parent[c]] += levels[l - 1].sizes[c];
    }
  }
  return ClusterTree(std::move(levels), std::move(base_assignment));
}

void save_tree(const ClusterTree& tree, const std::filesystem::path& path,
               bool include_centroids) {
  io::FileWriter out(path);
  out.write(kMagic, 4);
  out.u32(kVersion);
  out.u32(tree.depth());

  for (uint32_t l = 1; l <= tree.depth(); ++l) {
    const TreeLevel& lev = tree.level(l);
    const bool top = l == tree.depth();
    const uint32_t dim = include_centroids ? lev.dim : 0;
    const uint64_t section_len = 8ull + static_cast<uint64_t>(lev.cluster_count) * dim * 4 +
                                 (top ? 0ull : static_cast<uint64_t>(lev.cluster_count) * 4) +
                                 static_cast<uint64_t>(lev.cluster_count) * 8;
    out.u64(section_len);
    out.u32(lev.cluster_count);
    out.u32(dim);
    if (dim != 0) out.f32_array(lev.centroids.data(), lev.centroids.size());
    if (!top) out.u32_array(lev.parent.data(), lev.parent.size());
    out.u64_array(lev.sizes.data(), lev.sizes.size());
  }

  const auto& base = tree.base_assignment();
  out.u64(8ull + static_cast<uint64_t>(base.size()) * 4);
  out.u64(base.size());
  out.u32_array(base.data(), base.size());
  out.close();
}

ClusterTree load_tree(const std::filesystem::path& path) {
  io::FileReader in(path);
  io::check_magic(in, kMagic, "HCT1");
  const uint32_t version = in.u32(errc::truncated_file, "tree header cut short");
  if (version != kVersion) {
    fail(errc::version_mismatch, "tree file version " + std::to_string(version) + " unsupported");
  }
  const uint32_t depth = in.u32(errc::truncated_file, "tree header cut short");
  if (depth < 2 || depth > 64) {
    fail(errc::corrupt_section, "tree depth " + std::to_string(depth) + " implausible");
  }

  std::vector<TreeLevel> levels(depth);
  for (uint32_t l = 1; l <= depth; ++l) {
    const std::string name = level_name(l) + " section";
    const bool top = l == depth;
    const uint64_t section_len = in.u64(errc::corrupt_section, name + " length missing");
    TreeLevel& lev = levels[l - 1];
    lev.cluster_count = in.u32(errc::corrupt_section, name + " cut short");
    lev.dim = in.u32(errc::corrupt_section, name + " cut short");
    const uint64_t expect = 8ull + static_cast<uint64_t>(lev.cluster_count) * lev.dim * 4 +
                            (top ? 0ull : static_cast<uint64_t>(lev.cluster_count) * 4) +
                            static_cast<uint64_t>(lev.cluster_count) * 8;
    if (section_len != expect) fail(errc::corrupt_section, name + " length mismatch");
    if (lev.dim != 0) {
      lev.centroids.resize(static_cast<size_t>(lev.cluster_count) * lev.dim);
      in.f32_array(lev.centroids.data(), lev.centroids.size(), errc::corrupt_section,
                   name + " centroid payload cut short");
    }
    if (!top) {
      lev.parent.resize(lev.cluster_count);
      in.u32_array(lev.parent.data(), lev.parent.size(), errc::corrupt_section,
                   name + " parent payload cut short");
    }
    lev.sizes.resize(lev.cluster_count);
    in.u64_array(lev.sizes.data(), lev.sizes.size(), errc::corrupt_section,
                 name + " sizes payload cut short");
  }

  const uint64_t base_len = in.u64(errc::corrupt_section, "base section length missing");
  const uint64_t count = in.u64(errc::corrupt_section, "base section cut short");
  if (base_len != 8ull + count * 4) fail(errc::corrupt_section, "base section length mismatch");
  std::vector<uint32_t> base(count);
  in.u32_array(base.data(), count, errc::corrupt_section, "base assignment cut short");

  return ClusterTree(std::move(levels), std::move(base));
}

}  // namespace curatree
