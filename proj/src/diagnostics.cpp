#include "curatree/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "curatree/error.hpp"
#include "curatree/rng.hpp"

namespace curatree {

double tv_distance(std::span<const double> proportions) {
  if (proportions.empty()) fail(errc::invalid_proportions, "empty proportion vector");
  double total = 0.0;
  for (double p : proportions) {
    if (p < 0.0) fail(errc::invalid_proportions, "negative proportion");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(errc::invalid_proportions, "proportions sum to " + std::to_string(total) + ", not 1");
  }
  const double uniform = 1.0 / static_cast<double>(proportions.size());
  double tv = 0.0;
  for (double p : proportions) tv += std::abs(p - uniform);
  return 0.5 * tv;
}

std::vector<uint64_t> level_counts_of(const ClusterTree& tree,
                                      std::span<const uint32_t> bottom_clusters,
                                      uint32_t level) {
  std::vector<uint64_t> counts(tree.level(level).cluster_count, 0);
  for (uint32_t bc : bottom_clusters) {
    counts[tree.ancestor_of_base(bc, level)]++;
  }
  return counts;
}

double realized_tv(const ClusterTree& tree, const CuratedSubset& subset, uint32_t level) {
  if (subset.achieved == 0) fail(errc::empty_subset, "cannot measure TV of an empty subset");
  const auto counts = level_counts_of(tree, subset.bottom_cluster, level);
  std::vector<double> p(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) {
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(subset.achieved);
  }
  return tv_distance(p);
}

TvCurve tv_curve(const ClusterTree& tree, uint32_t sampling_level, uint32_t measure_level,
                 std::span<const double> fractions, uint64_t seed) {
  if (fractions.empty()) fail(errc::invalid_input, "no fractions given");
  for (size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] <= 0.0 || fractions[i] > 1.0) {
      fail(errc::invalid_input, "fractions must lie in (0, 1]");
    }
    if (i > 0 && fractions[i] <= fractions[i - 1]) {
      fail(errc::invalid_input, "fractions must be strictly increasing");
    }
  }
  tree.level(measure_level);  // validates the level

  TvCurve curve;
  curve.sampling_level = sampling_level;
  curve.measure_level = measure_level;
  for (double f : fractions) {
    const CuratedSubset subset =
        sample_subset(tree, sampling_level, SubsetTarget::fraction(f), seed);
    curve.points.push_back({f, realized_tv(tree, subset, measure_level)});
  }
  return curve;
}

namespace {

// C(n, 2) in unsigned 128-bit; inputs up to ~4e9 stay exact.
unsigned __int128 choose2(uint64_t n) {
  if (n < 2) return 0;
  return static_cast<unsigned __int128>(n) * (n - 1) / 2;
}

// First-occurrence canonical form; two labelings describe the same partition
// iff their canonical forms are equal.
std::vector<uint32_t> canonical_partition(std::span<const int64_t> labels) {
  std::vector<uint32_t> out(labels.size());
  std::unordered_map<int64_t, uint32_t> ids;
  ids.reserve(labels.size());
  uint32_t next = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], next);
    if (inserted) next++;
    out[i] = it->second;
  }
  return out;
}

}  // namespace

double adjusted_rand_index(std::span<const int64_t> labels_a,
                           std::span<const int64_t> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    fail(errc::length_mismatch, "labelings have different lengths");
  }
  const uint64_t n = labels_a.size();
  if (n < 2) fail(errc::invalid_input, "ARI needs at least 2 items");

  const auto a = canonical_partition(labels_a);
  const auto b = canonical_partition(labels_b);

  std::unordered_map<uint64_t, uint64_t> contingency;
  contingency.reserve(n);
  std::unordered_map<uint32_t, uint64_t> row_sums;
  std::unordered_map<uint32_t, uint64_t> col_sums;
  for (uint64_t i = 0; i < n; ++i) {
    contingency[(static_cast<uint64_t>(a[i]) << 32) | b[i]]++;
    row_sums[a[i]]++;
    col_sums[b[i]]++;
  }

  unsigned __int128 sum_cells = 0;
  for (const auto& [key, count] : contingency) sum_cells += choose2(count);
  unsigned __int128 sum_rows = 0;
  for (const auto& [key, count] : row_sums) sum_rows += choose2(count);
  unsigned __int128 sum_cols = 0;
  for (const auto& [key, count] : col_sums) sum_cols += choose2(count);
  const unsigned __int128 pairs = choose2(n);

  // ARI = (sum_cells - E) / (M - E) with E = sum_rows*sum_cols/pairs and
  // M = (sum_rows+sum_cols)/2, scaled by 2*pairs to keep everything integer:
  // numerator = 2*pairs*sum_cells - 2*sum_rows*sum_cols
  // denominator = pairs*(sum_rows+sum_cols) - 2*sum_rows*sum_cols
  // The products fit 128 bits for n up to ~1e9 (each factor < 5e17).
  const __int128 cross = static_cast<__int128>(sum_rows) * static_cast<__int128>(sum_cols) * 2;
  const __int128 numerator = static_cast<__int128>(pairs) * static_cast<__int128>(sum_cells) * 2 - cross;
  const __int128 denominator =
      static_cast<__int128>(pairs) * (static_cast<__int128>(sum_rows) + static_cast<__int128>(sum_cols)) - cross;

  if (denominator == 0) {
    // Both partitions trivial (all-singletons or single-cluster in each).
    return a == b ? 1.0 : 0.0;
  }
  if (numerator == denominator) return 1.0;
  return static_cast<double>(static_cast<long double>(numerator) /
                             static_cast<long double>(denominator));
}

std::vector<SizeHistogramRow> cluster_size_histogram(const ClusterTree& tree, uint32_t level) {
  const TreeLevel& lev = tree.level(level);
  std::vector<SizeHistogramRow> rows(lev.cluster_count);
  for (uint32_t c = 0; c < lev.cluster_count; ++c) {
    rows[c] = {c, lev.sizes[c], std::log10(static_cast<double>(lev.sizes[c]))};
  }
  return rows;
}

std::string format_sig12(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::string histogram_csv(const std::vector<SizeHistogramRow>& rows) {
  std::string out = "cluster_id,size,log10_size\n";
  for (const auto& r : rows) {
    out += std::to_string(r.cluster_id);
    out += ',';
    out += std::to_string(r.size);
    out += ',';
    out += format_sig12(r.log10_size);
    out += '\n';
  }
  return out;
}

std::string tv_curve_csv(const TvCurve& curve) {
  std::string out = "sampling_level,measure_level,fraction,tv\n";
  for (const auto& pt : curve.points) {
    out += std::to_string(curve.sampling_level);
    out += ',';
    out += std::to_string(curve.measure_level);
    out += ',';
    out += format_sig12(pt.fraction);
    out += ',';
    out += format_sig12(pt.tv);
    out += '\n';
  }
  return out;
}

SyntheticData generate_heavy_tailed(uint64_t num_points, uint32_t dim,
                                    uint32_t num_components, double tail_exponent,
                                    uint64_t seed) {
  if (num_components == 0 || num_components > num_points) {
    fail(errc::invalid_params, "need 1 <= num_components <= num_points");
  }
  if (dim == 0) fail(errc::invalid_params, "dim must be positive");
  if (!(tail_exponent >= 0.0)) fail(errc::invalid_params, "tail_exponent must be >= 0");

  // Zipf-like apportionment by largest remainder, then lift any zero-sized
  // component to 1 at the expense of the largest ones.
  std::vector<double> weights(num_components);
  double wsum = 0.0;
  for (uint32_t r = 0; r < num_components; ++r) {
    weights[r] = std::pow(static_cast<double>(r + 1), -tail_exponent);
    wsum += weights[r];
  }
  std::vector<uint64_t> sizes(num_components);
  std::vector<std::pair<double, uint32_t>> remainders(num_components);
  uint64_t assigned = 0;
  for (uint32_t r = 0; r < num_components; ++r) {
    const double share = weights[r] / wsum * static_cast<double>(num_points);
    sizes[r] = static_cast<uint64_t>(std::floor(share));
    remainders[r] = {share - std::floor(share), r};
    assigned += sizes[r];
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  for (uint64_t i = 0; assigned < num_points; ++i) {
    sizes[remainders[i % num_components].second]++;
    assigned++;
  }
  for (uint32_t r = num_components; r-- > 0;) {
    if (sizes[r] == 0) {
      uint32_t donor = 0;
      for (uint32_t d = 1; d < num_components; ++d) {
        if (sizes[d] > sizes[donor]) donor = d;
      }
      sizes[donor]--;
      sizes[r]++;
    }
  }

  constexpr double kMeanScale = 8.0;
  SyntheticData out;
  out.component_sizes = sizes;
  out.matrix.count = num_points;
  out.matrix.dim = dim;
  out.matrix.normalized = false;
  out.matrix.data.resize(num_points * static_cast<uint64_t>(dim));
  out.labels.resize(num_points);

  uint64_t row = 0;
  for (uint32_t r = 0; r < num_components; ++r) {
    Rng rng(mix_seed({seed, r, 0x636f6d70ULL}));
    std::vector<double> mean(dim);
    for (uint32_t j = 0; j < dim; ++j) mean[j] = kMeanScale * rng.gaussian();
    for (uint64_t i = 0; i < sizes[r]; ++i, ++row) {
      float* dst = out.matrix.data.data() + row * dim;
      for (uint32_t j = 0; j < dim; ++j) {
        dst[j] = static_cast<float>(mean[j] + rng.gaussian());
      }
      out.labels[row] = r;
    }
  }
  return out;
}

}  // namespace curatree
