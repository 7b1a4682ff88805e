#include "curatree/stratifier.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "curatree/error.hpp"
#include "curatree/rng.hpp"

namespace curatree {

namespace {

constexpr char kLedgerMagic[4] = {'L', 'G', 'R', '1'};

void check_plan_args(const CuratedSubset& subset, uint32_t batch_size) {
  if (subset.achieved == 0) fail(errc::empty_subset, "cannot plan batches over an empty subset");
  if (batch_size < 1) fail(errc::batch_too_small, "batch size must be >= 1");
  if (batch_size > subset.achieved) {
    fail(errc::batch_too_large, "batch size " + std::to_string(batch_size) +
                                    " exceeds the " + std::to_string(subset.achieved) +
                                    " unique curated tiles");
  }
}

}  // namespace

uint64_t ObservationLedger::total_emitted() const {
  return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

ObservationLedger make_ledger(const CuratedSubset& subset, const ClusterTree& tree,
                              uint64_t seed) {
  ObservationLedger ledger;
  ledger.seed = seed;
  ledger.counts.assign(subset.achieved, 0);

  std::map<uint32_t, std::vector<uint64_t>> groups;
  for (uint64_t pos = 0; pos < subset.achieved; ++pos) {
    if (subset.row_indices[pos] >= tree.count()) {
      fail(errc::index_out_of_range,
           "subset row " + std::to_string(subset.row_indices[pos]) +
               " does not exist in a tree over " + std::to_string(tree.count()) + " rows");
    }
    const uint32_t top = tree.ancestor_of_base(subset.bottom_cluster[pos], tree.depth());
    groups[top].push_back(pos);
  }
  ledger.cluster_ids.reserve(groups.size());
  ledger.cluster_tiles.reserve(groups.size());
  for (auto& [cid, tiles] : groups) {
    ledger.cluster_ids.push_back(cid);
    ledger.cluster_tiles.push_back(std::move(tiles));
  }
  return ledger;
}

namespace {

// One stratified batch. Draws mutate `in_batch` (marker == batch tag) and the
// ledger counts are bumped at the end, per the batch-boundary semantics.
void emit_stratified_batch(ObservationLedger& ledger, const CuratedSubset& subset,
                           uint32_t batch_size, BatchPlan& plan) {
  const size_t k = ledger.cluster_ids.size();
  const uint64_t g = ledger.batches_emitted;

  std::vector<char> in_batch(subset.achieved, 0);

  std::vector<uint64_t> quota(k, batch_size / k);
  const uint64_t rem = batch_size % k;
  for (uint64_t t = 0; t < rem; ++t) quota[(g + t) % k]++;

  std::vector<Rng> rng;
  rng.reserve(k);
  for (size_t j = 0; j < k; ++j) {
    rng.emplace_back(mix_seed({ledger.seed, g, ledger.cluster_ids[j], 0x62617463ULL}));
  }

  std::vector<uint64_t> used(k, 0);
  std::vector<std::vector<uint64_t>> drawn(k);

  // Least-observed draw: fill from the lowest observation-count stratum of
  // the cluster's not-yet-used tiles, uniformly inside a stratum, moving to
  // the next stratum only when the current one is exhausted.
  auto draw_into = [&](size_t j, uint64_t want) -> uint64_t {
    if (want == 0) return 0;
    std::map<uint64_t, std::vector<uint64_t>> strata;
    for (uint64_t pos : ledger.cluster_tiles[j]) {
      if (!in_batch[pos]) strata[ledger.counts[pos]].push_back(pos);
    }
    uint64_t taken = 0;
    for (auto& [count, candidates] : strata) {
      if (taken == want) break;
      const uint64_t need = want - taken;
      if (candidates.size() <= need) {
        for (uint64_t pos : candidates) {
          in_batch[pos] = 1;
          drawn[j].push_back(pos);
        }
        taken += candidates.size();
      } else {
        for (uint64_t p : sample_without_replacement(rng[j], candidates.size(), need)) {
          in_batch[candidates[p]] = 1;
          drawn[j].push_back(candidates[p]);
        }
        taken += need;
      }
    }
    return taken;
  };

  uint64_t deficit = 0;
  for (size_t j = 0; j < k; ++j) {
    used[j] = draw_into(j, quota[j]);
    deficit += quota[j] - used[j];
  }

  // Redistribute missing slots fewest-taken-first across clusters that still
  // have unused tiles, so non-deficient clusters stay within one of each
  // other.
  while (deficit > 0) {
    size_t pick = k;
    for (size_t j = 0; j < k; ++j) {
      if (used[j] >= ledger.cluster_tiles[j].size()) continue;
      if (pick == k || used[j] < used[pick]) pick = j;
    }
    if (pick == k) {
      fail(errc::internal, "batch redistribution ran out of tiles");  // precluded by B <= subset
    }
    used[pick] += draw_into(pick, 1);
    deficit--;
  }

  const uint64_t max_used = *std::max_element(used.begin(), used.end());
  for (size_t j = 0; j < k; ++j) {
    const bool exhausted = used[j] == ledger.cluster_tiles[j].size();
    if (used[j] < quota[j] || (exhausted && max_used - used[j] >= 2)) {
      plan.deficits.push_back({g, ledger.cluster_ids[j], quota[j], used[j]});
    }
  }

  std::vector<uint64_t> rows;
  rows.reserve(batch_size);
  std::map<uint32_t, uint64_t> composition;
  for (size_t j = 0; j < k; ++j) {
    std::sort(drawn[j].begin(), drawn[j].end());
    for (uint64_t pos : drawn[j]) rows.push_back(subset.row_indices[pos]);
    if (used[j] > 0) composition[ledger.cluster_ids[j]] = used[j];
    for (uint64_t pos : drawn[j]) ledger.counts[pos]++;
  }
  plan.batches.push_back(std::move(rows));
  plan.composition.push_back(std::move(composition));
  ledger.batches_emitted++;
}

}  // namespace

BatchPlan plan_more_batches(ObservationLedger& ledger, const CuratedSubset& subset,
                            uint32_t batch_size, uint64_t num_batches) {
  check_plan_args(subset, batch_size);
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.mode = BatchMode::stratified;
  for (uint64_t b = 0; b < num_batches; ++b) {
    emit_stratified_batch(ledger, subset, batch_size, plan);
  }
  return plan;
}

StratifiedResult plan_stratified(const CuratedSubset& subset, const ClusterTree& tree,
                                 uint32_t batch_size, uint64_t num_batches, uint64_t seed) {
  check_plan_args(subset, batch_size);
  StratifiedResult result;
  result.ledger = make_ledger(subset, tree, seed);
  result.plan = plan_more_batches(result.ledger, subset, batch_size, num_batches);
  return result;
}

BatchPlan plan_random(const CuratedSubset& subset, const ClusterTree& tree,
                      uint32_t batch_size, uint64_t num_batches, uint64_t seed) {
  check_plan_args(subset, batch_size);

  std::vector<uint32_t> top_of(subset.achieved);
  for (uint64_t pos = 0; pos < subset.achieved; ++pos) {
    top_of[pos] = tree.ancestor_of_base(subset.bottom_cluster[pos], tree.depth());
  }

  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.mode = BatchMode::random;
  for (uint64_t b = 0; b < num_batches; ++b) {
    Rng rng(mix_seed({seed, b, 0x72616e64ULL}));
    const auto picks = sample_without_replacement(rng, subset.achieved, batch_size);
    std::vector<uint64_t> rows;
    rows.reserve(picks.size());
    std::map<uint32_t, uint64_t> composition;
    for (uint64_t pos : picks) {
      rows.push_back(subset.row_indices[pos]);
      composition[top_of[pos]]++;
    }
    plan.batches.push_back(std::move(rows));
    plan.composition.push_back(std::move(composition));
  }
  return plan;
}

LedgerSummary ledger_report(const ObservationLedger& ledger) {
  LedgerSummary summary;
  summary.total_emitted = ledger.total_emitted();

  uint64_t covered = 0;
  uint64_t min_all = ledger.counts.empty() ? 0 : std::numeric_limits<uint64_t>::max();
  for (uint64_t c : ledger.counts) {
    if (c >= 1) covered++;
    min_all = std::min(min_all, c);
  }
  summary.coverage = ledger.counts.empty()
                         ? 0.0
                         : static_cast<double>(covered) / static_cast<double>(ledger.counts.size());
  summary.multiplicity = min_all;

  for (size_t j = 0; j < ledger.cluster_ids.size(); ++j) {
    ClusterCountStats stats;
    stats.cluster_id = ledger.cluster_ids[j];
    stats.min = std::numeric_limits<uint64_t>::max();
    uint64_t total = 0;
    for (uint64_t pos : ledger.cluster_tiles[j]) {
      stats.min = std::min(stats.min, ledger.counts[pos]);
      stats.max = std::max(stats.max, ledger.counts[pos]);
      total += ledger.counts[pos];
    }
    stats.mean = static_cast<double>(total) / static_cast<double>(ledger.cluster_tiles[j].size());
    summary.per_cluster.push_back(stats);
  }
  return summary;
}

void save_batch_plan(const BatchPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot open batch plan for writing: " + path.string());
  for (size_t b = 0; b < plan.batches.size(); ++b) {
    nlohmann::json composition = nlohmann::json::object();
    for (const auto& [cid, count] : plan.composition[b]) {
      composition[std::to_string(cid)] = count;
    }
    nlohmann::json line{{"batch", b}, {"indices", plan.batches[b]}, {"composition", composition}};
    out << line.dump() << '\n';
  }
  if (!out) fail(errc::io_error, "error writing batch plan to " + path.string());
}

void ledger_save(const ObservationLedger& ledger, const std::filesystem::path& path) {
  io::FileWriter out(path);
  out.write(kLedgerMagic, 4);
  out.u64_array(ledger.counts.data(), ledger.counts.size());
  out.close();
}

std::vector<uint64_t> ledger_load_counts(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) fail(errc::not_found, "cannot stat ledger file: " + path.string());
  if (size < 4 || (size - 4) % 8 != 0) {
    fail(errc::corrupt_section, "ledger checkpoint has invalid size: " + path.string());
  }
  io::FileReader in(path);
  io::check_magic(in, kLedgerMagic, "LGR1");
  std::vector<uint64_t> counts((size - 4) / 8);
  in.u64_array(counts.data(), counts.size(), errc::corrupt_section, "ledger counts cut short");
  return counts;
}

}  // namespace curatree
