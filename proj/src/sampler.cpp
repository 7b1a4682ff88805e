#include "curatree/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "binary_io.hpp"
#include "curatree/error.hpp"
#include "curatree/rng.hpp"

namespace curatree {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'S', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagWideIndices = 1u << 0;

uint64_t capped_sum(uint64_t m, std::span<const uint64_t> sizes) {
  uint64_t total = 0;
  for (uint64_t s : sizes) total += std::min(m, s);
  return total;
}

uint64_t abs_diff(uint64_t a, uint64_t b) { return a > b ? a - b : b - a; }

}  // namespace

uint64_t SubsetTarget::resolve(uint64_t total) const {
  if (!frac) return count;
  if (*frac < 0.0 || *frac > 1.0) {
    fail(errc::target_exceeds_data, "fraction " + std::to_string(*frac) + " outside [0, 1]");
  }
  return static_cast<uint64_t>(std::floor(*frac * static_cast<double>(total) + 0.5));
}

AllocationPlan allocate(uint64_t target, std::span<const uint64_t> sizes) {
  if (sizes.empty() && target > 0) {
    fail(errc::invalid_input, "cannot allocate a positive target over no clusters");
  }
  for (uint64_t s : sizes) {
    if (s == 0) fail(errc::invalid_input, "cluster sizes must be >= 1");
  }

  AllocationPlan plan;
  plan.target = target;
  plan.children_sizes.assign(sizes.begin(), sizes.end());

  if (!sizes.empty() && target > 0) {
    // Smallest m* in [0, target] with f(m*) >= min(target, f(target)); the
    // optimum is m* or its predecessor.
    const uint64_t reachable = std::min(target, capped_sum(target, sizes));
    uint64_t lo = 0;
    uint64_t hi = target;
    while (lo < hi) {
      const uint64_t mid = lo + (hi - lo) / 2;
      if (capped_sum(mid, sizes) >= reachable) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    plan.n = lo;
    uint64_t best = abs_diff(target, capped_sum(lo, sizes));
    if (lo > 0 && abs_diff(target, capped_sum(lo - 1, sizes)) <= best) {
      plan.n = lo - 1;
    }
  }

  plan.quotas.resize(sizes.size());
  for (size_t i = 0; i < sizes.size(); ++i) {
    plan.quotas[i] = std::min(plan.n, sizes[i]);
    plan.achieved += plan.quotas[i];
  }
  return plan;
}

namespace {

struct DrawnCluster {
  uint32_t bottom_cluster;
  std::vector<uint64_t> rows;  // ascending
};

// Allocates quota down one branch of the tree; at level 1 draws the rows.
void recurse_branch(const ClusterTree& tree, uint32_t level, uint32_t cluster, uint64_t quota,
                    uint64_t seed, std::vector<DrawnCluster>& out) {
  if (quota == 0) return;
  if (level == 1) {
    const auto members = tree.base_members(cluster);
    Rng rng(mix_seed({seed, 1, cluster}));
    const auto picks = sample_without_replacement(rng, members.size(), quota);
    DrawnCluster drawn;
    drawn.bottom_cluster = cluster;
    drawn.rows.reserve(picks.size());
    for (uint64_t p : picks) drawn.rows.push_back(members[p]);
    out.push_back(std::move(drawn));
    return;
  }
  const auto children = tree.children_of(level, cluster);
  std::vector<uint64_t> child_sizes(children.size());
  const auto& below = tree.level(level - 1);
  for (size_t i = 0; i < children.size(); ++i) child_sizes[i] = below.sizes[children[i]];
  const AllocationPlan plan = allocate(quota, child_sizes);
  for (size_t i = 0; i < children.size(); ++i) {
    recurse_branch(tree, level - 1, children[i], plan.quotas[i], seed, out);
  }
}

}  // namespace

CuratedSubset sample_subset(const ClusterTree& tree, uint32_t level, SubsetTarget target,
                            uint64_t seed, bool exact) {
  if (level < 2 || level > tree.depth()) {
    fail(errc::invalid_level, "sampling level " + std::to_string(level) + " outside [2, " +
                                  std::to_string(tree.depth()) + "]");
  }
  const uint64_t n_target = target.resolve(tree.count());
  if (n_target > tree.count()) {
    fail(errc::target_exceeds_data, "target " + std::to_string(n_target) +
                                        " exceeds data count " + std::to_string(tree.count()));
  }

  const auto& top = tree.level(level);
  const AllocationPlan plan = allocate(n_target, top.sizes);

  // Draws stay grouped per sampling-level cluster so exact trimming can rank
  // realized counts.
  std::vector<std::vector<DrawnCluster>> per_cluster(top.cluster_count);
  for (uint32_t c = 0; c < top.cluster_count; ++c) {
    recurse_branch(tree, level, c, plan.quotas[c], seed, per_cluster[c]);
  }

  uint64_t achieved = 0;
  std::vector<uint64_t> realized(top.cluster_count, 0);
  for (uint32_t c = 0; c < top.cluster_count; ++c) {
    for (const auto& d : per_cluster[c]) realized[c] += d.rows.size();
    achieved += realized[c];
  }

  if (exact && achieved > n_target) {
    uint64_t excess = achieved - n_target;
    while (excess > 0) {
      uint32_t worst = 0;
      for (uint32_t c = 1; c < top.cluster_count; ++c) {
        if (realized[c] > realized[worst]) worst = c;
      }
      // Most-drawn bottom cluster inside it, lowest id first on ties; drop
      // that cluster's highest row index.
      auto& drawn = per_cluster[worst];
      size_t pick = 0;
      for (size_t i = 1; i < drawn.size(); ++i) {
        const bool bigger = drawn[i].rows.size() > drawn[pick].rows.size();
        const bool tie_lower = drawn[i].rows.size() == drawn[pick].rows.size() &&
                               drawn[i].bottom_cluster < drawn[pick].bottom_cluster;
        if (bigger || tie_lower) pick = i;
      }
      drawn[pick].rows.pop_back();
      if (drawn[pick].rows.empty()) drawn.erase(drawn.begin() + pick);
      realized[worst]--;
      achieved--;
      excess--;
    }
  }

  CuratedSubset subset;
  subset.sampling_level = level;
  subset.target = n_target;
  subset.seed = seed;
  subset.achieved = achieved;
  std::vector<std::pair<uint64_t, uint32_t>> entries;
  entries.reserve(achieved);
  for (const auto& group : per_cluster) {
    for (const auto& d : group) {
      for (uint64_t r : d.rows) entries.emplace_back(r, d.bottom_cluster);
    }
  }
  std::sort(entries.begin(), entries.end());
  subset.row_indices.reserve(entries.size());
  subset.bottom_cluster.reserve(entries.size());
  for (const auto& [row, cluster] : entries) {
    subset.row_indices.push_back(row);
    subset.bottom_cluster.push_back(cluster);
  }
  return subset;
}

void subset_save(const CuratedSubset& subset, const std::filesystem::path& path) {
  const bool wide = !subset.row_indices.empty() &&
                    subset.row_indices.back() > 0xFFFFFFFFull;
  io::FileWriter out(path);
  out.write(kMagic, 4);
  out.u32(kVersion);
  out.u32(wide ? kFlagWideIndices : 0);
  out.u64(subset.target);
  out.u64(subset.achieved);
  out.u32(subset.sampling_level);
  out.u64(subset.seed);
  for (size_t i = 0; i < subset.row_indices.size(); ++i) {
    if (wide) {
      out.u64(subset.row_indices[i]);
    } else {
      out.u32(static_cast<uint32_t>(subset.row_indices[i]));
    }
    out.u32(subset.bottom_cluster[i]);
  }
  out.close();
}

CuratedSubset subset_load(const std::filesystem::path& path,
                          std::optional<uint64_t> expect_count) {
  io::FileReader in(path);
  io::check_magic(in, kMagic, "CSS1");
  const uint32_t version = in.u32(errc::truncated_file, "subset header cut short");
  if (version != kVersion) {
    fail(errc::version_mismatch, "subset file version " + std::to_string(version) + " unsupported");
  }
  const uint32_t flags = in.u32(errc::truncated_file, "subset header cut short");
  const bool wide = flags & kFlagWideIndices;

  CuratedSubset subset;
  subset.target = in.u64(errc::truncated_file, "subset header cut short");
  subset.achieved = in.u64(errc::truncated_file, "subset header cut short");
  subset.sampling_level = in.u32(errc::truncated_file, "subset header cut short");
  subset.seed = in.u64(errc::truncated_file, "subset header cut short");

  subset.row_indices.resize(subset.achieved);
  subset.bottom_cluster.resize(subset.achieved);
  for (uint64_t i = 0; i < subset.achieved; ++i) {
    subset.row_indices[i] = wide ? in.u64(errc::corrupt_section, "subset entries cut short")
                                 : in.u32(errc::corrupt_section, "subset entries cut short");
    subset.bottom_cluster[i] = in.u32(errc::corrupt_section, "subset entries cut short");
    if (expect_count && subset.row_indices[i] >= *expect_count) {
      fail(errc::index_out_of_range,
           "subset row index " + std::to_string(subset.row_indices[i]) +
               " outside data count " + std::to_string(*expect_count));
    }
  }
  return subset;
}

}  // namespace curatree
