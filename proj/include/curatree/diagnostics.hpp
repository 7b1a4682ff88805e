#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curatree/embeddings.hpp"
#include "curatree/hierarchy.hpp"
#include "curatree/sampler.hpp"

namespace curatree {

// Total variation distance of a proportion vector against uniform:
// 0.5 * sum_i |p_i - 1/k|. Entries must be non-negative and sum to 1 within
// 1e-9. Zero iff uniform; at most (k-1)/k.
double tv_distance(std::span<const double> proportions);

// Per-cluster counts of the given rows' ancestors at a level, over all
// clusters at that level (zeros included).
std::vector<uint64_t> level_counts_of(const ClusterTree& tree,
                                      std::span<const uint32_t> bottom_clusters,
                                      uint32_t level);

// TV of a subset's realized cluster proportions measured at a level.
double realized_tv(const ClusterTree& tree, const CuratedSubset& subset, uint32_t level);

struct TvCurvePoint {
  double fraction = 0.0;
  double tv = 0.0;
};

struct TvCurve {
  uint32_t sampling_level = 0;
  uint32_t measure_level = 0;
  std::vector<TvCurvePoint> points;
};

// For each fraction (strictly increasing, in (0, 1]): sample a subset at
// sampling_level and measure the realized TV at measure_level. The same seed
// is shared across fractions.
TvCurve tv_curve(const ClusterTree& tree, uint32_t sampling_level, uint32_t measure_level,
                 std::span<const double> fractions, uint64_t seed);

// Chance-corrected pair-counting agreement between two labelings of the same
// items. Labels are arbitrary integers. Exact integer arithmetic internally,
// safe up to n around 1e9; returns exactly 1.0 for identical partitions. The
// degenerate 0/0 denominator (both partitions trivial) yields 1.0 when the
// partitions are identical and 0.0 otherwise.
double adjusted_rand_index(std::span<const int64_t> labels_a,
                           std::span<const int64_t> labels_b);

struct SizeHistogramRow {
  uint64_t cluster_id = 0;
  uint64_t size = 0;
  double log10_size = 0.0;
};

std::vector<SizeHistogramRow> cluster_size_histogram(const ClusterTree& tree, uint32_t level);

// CSV emission: header row, comma separators, '.' decimal, 12 significant
// digits for floating values.
std::string format_sig12(double value);
std::string histogram_csv(const std::vector<SizeHistogramRow>& rows);
std::string tv_curve_csv(const TvCurve& curve);

struct SyntheticData {
  EmbeddingMatrix matrix;
  std::vector<uint32_t> labels;          // generating component per row
  std::vector<uint64_t> component_sizes; // by component rank
};

// Gaussian mixture with Zipf-like component sizes (size of rank r
// proportional to (r+1)^-tail_exponent), component means from a scaled
// standard normal and unit isotropic scale. The generating labels come back
// for oracle checks.
SyntheticData generate_heavy_tailed(uint64_t num_points, uint32_t dim,
                                    uint32_t num_components, double tail_exponent,
                                    uint64_t seed);

}  // namespace curatree
