#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curatree/hierarchy.hpp"
#include "curatree/sampler.hpp"

namespace curatree {

// Per-curated-tile observation counts plus the top-cluster index over subset
// positions. Counts are the serial dependency across batches: within every
// cluster, max - min stays <= 1 at each batch boundary because draws always
// exhaust the least-observed stratum first.
struct ObservationLedger {
  std::vector<uint64_t> counts;                     // one per curated tile
  std::vector<uint32_t> cluster_ids;                // populated top clusters, ascending
  std::vector<std::vector<uint64_t>> cluster_tiles; // subset positions per cluster
  uint64_t seed = 0;
  uint64_t batches_emitted = 0;

  uint64_t total_emitted() const;
};

ObservationLedger make_ledger(const CuratedSubset& subset, const ClusterTree& tree,
                              uint64_t seed);

enum class BatchMode { stratified, random };

// A cluster that could not fill the slots the batch asked of it, either
// because its curated population is below its quota or because it ran out
// while absorbing redistributed slots.
struct DeficitEvent {
  uint64_t batch = 0;
  uint32_t cluster_id = 0;
  uint64_t requested = 0;
  uint64_t taken = 0;
};

struct BatchPlan {
  uint32_t batch_size = 0;
  BatchMode mode = BatchMode::stratified;
  std::vector<std::vector<uint64_t>> batches;              // row indices
  std::vector<std::map<uint32_t, uint64_t>> composition;   // per batch: cluster -> count
  std::vector<DeficitEvent> deficits;
};

// Stratified plan: every batch takes floor(B/k) tiles per populated top
// cluster, with the B mod k bonus slots rotating by batch index so long-run
// exposure is equal. Within a cluster, draws are uniform over the tiles with
// the lowest observation count, spilling into the next count stratum only
// when the quota exceeds it; a tile never repeats within one batch. Deficits
// are redistributed over the remaining clusters, fewest-taken first, by the
// same least-observed rule.
struct StratifiedResult {
  BatchPlan plan;
  ObservationLedger ledger;
};

StratifiedResult plan_stratified(const CuratedSubset& subset, const ClusterTree& tree,
                                 uint32_t batch_size, uint64_t num_batches, uint64_t seed);

// Resume/streaming variant: extends an existing ledger in place.
BatchPlan plan_more_batches(ObservationLedger& ledger, const CuratedSubset& subset,
                            uint32_t batch_size, uint64_t num_batches);

// Baseline: each batch is drawn uniformly without replacement from the
// subset (independent across batches). The tree is only consulted for the
// per-batch composition annotation.
BatchPlan plan_random(const CuratedSubset& subset, const ClusterTree& tree,
                      uint32_t batch_size, uint64_t num_batches, uint64_t seed);

struct ClusterCountStats {
  uint32_t cluster_id = 0;
  uint64_t min = 0;
  uint64_t max = 0;
  double mean = 0.0;
};

struct LedgerSummary {
  std::vector<ClusterCountStats> per_cluster;
  double coverage = 0.0;     // share of tiles with count >= 1
  uint64_t multiplicity = 0; // min count over all tiles
  uint64_t total_emitted = 0;
};

LedgerSummary ledger_report(const ObservationLedger& ledger);

// Batch plan file: one JSON object per line, {"batch": i, "indices": [...],
// "composition": {"<cluster_id>": count, ...}}.
void save_batch_plan(const BatchPlan& plan, const std::filesystem::path& path);

// Ledger checkpoint: "LGR1" followed by the raw u64 counts.
void ledger_save(const ObservationLedger& ledger, const std::filesystem::path& path);
std::vector<uint64_t> ledger_load_counts(const std::filesystem::path& path);

}  // namespace curatree
