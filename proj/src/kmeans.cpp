#include "curatree/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curatree/error.hpp"
#include "curatree/parallel.hpp"
#include "curatree/rng.hpp"

namespace curatree {

namespace {

constexpr uint64_t kRowShard = 16384;

struct BestEntry {
  double key = -std::numeric_limits<double>::infinity();
  uint64_t index = std::numeric_limits<uint64_t>::max();
};

// Squared Euclidean distance; float accumulation keeps the hot loop
// vectorizable and the result is a pure function of the two rows.
inline float dist_sq(const float* a, const float* b, uint32_t dim) {
  float acc = 0.0f;
  for (uint32_t j = 0; j < dim; ++j) {
    const float d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

// Nearest centroid for one row; ties break to the lowest centroid index.
inline uint32_t nearest(const float* row, const float* centroids, uint32_t k, uint32_t dim,
                        float* best_out) {
  uint32_t best = 0;
  float best_d = dist_sq(row, centroids, dim);
  for (uint32_t c = 1; c < k; ++c) {
    const float d = dist_sq(row, centroids + static_cast<size_t>(c) * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  *best_out = best_d;
  return best;
}

void assign_pass(std::span<const float> rows, uint64_t n, uint32_t dim,
                 const std::vector<float>& centroids, uint32_t k,
                 std::vector<uint32_t>& assignment, std::vector<float>& dists) {
  const float* cents = centroids.data();
  parallel_shards(n, kRowShard, [&](size_t, uint64_t begin, uint64_t end) {
    for (uint64_t i = begin; i < end; ++i) {
      assignment[i] = nearest(rows.data() + i * dim, cents, k, dim, &dists[i]);
    }
  });
}

// Reseeds every empty cluster onto the row farthest from its assigned
// centroid within the largest cluster. Moves strictly reduce the objective
// (the moved row's distance drops to zero), so Lloyd monotonicity survives.
void repair_empty_clusters(std::span<const float> rows, uint64_t n, uint32_t dim,
                           std::vector<float>& centroids, uint32_t k,
                           std::vector<uint32_t>& assignment, std::vector<float>& dists,
                           std::vector<uint64_t>& counts) {
  counts.assign(k, 0);
  for (uint64_t i = 0; i < n; ++i) counts[assignment[i]]++;

  for (uint32_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    uint32_t donor = 0;
    for (uint32_t d = 1; d < k; ++d) {
      if (counts[d] > counts[donor]) donor = d;
    }
    uint64_t victim = n;
    float victim_d = -1.0f;
    for (uint64_t i = 0; i < n; ++i) {
      if (assignment[i] == donor && dists[i] > victim_d) {
        victim_d = dists[i];
        victim = i;
      }
    }
    const float* vrow = rows.data() + victim * dim;
    std::copy(vrow, vrow + dim, centroids.begin() + static_cast<size_t>(c) * dim);
    assignment[victim] = c;
    dists[victim] = 0.0f;
    counts[donor]--;
    counts[c] = 1;
  }
}

double total_inertia(const std::vector<float>& dists, uint64_t n) {
  // Fixed-size shards summed in shard order: identical result for any
  // worker count.
  const size_t shards = shard_count(n, kRowShard);
  std::vector<double> partial(shards, 0.0);
  parallel_shards(n, kRowShard, [&](size_t s, uint64_t begin, uint64_t end) {
    double acc = 0.0;
    for (uint64_t i = begin; i < end; ++i) acc += static_cast<double>(dists[i]);
    partial[s] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

std::vector<float> seed_random_rows(std::span<const float> rows, uint64_t n, uint32_t dim,
                                    uint32_t k, uint64_t seed) {
  Rng rng(mix_seed({seed, 0x726f7773ULL}));  // "rows"
  const std::vector<uint64_t> picks = sample_without_replacement(rng, n, k);
  std::vector<float> centroids(static_cast<size_t>(k) * dim);
  for (uint32_t c = 0; c < k; ++c) {
    const float* src = rows.data() + picks[c] * dim;
    std::copy(src, src + dim, centroids.begin() + static_cast<size_t>(c) * dim);
  }
  return centroids;
}

// D^2-weighted seeding in the style of k-means++, drawn through an
// exponential race: center t goes to argmax_i log(u_ti) / D2_i, with u_ti
// derived by hashing the row VALUES together with (seed, t). Because keys
// never involve row positions, permuting the input rows permutes the chosen
// centers identically, which is what the permutation-equivariance contract
// of kmeans_fit relies on. Duplicate rows share a key; the lowest index wins
// the tie, and since duplicates are interchangeable the resulting centers
// are the same up to that equivalence.
std::vector<float> seed_plus_plus(std::span<const float> rows, uint64_t n, uint32_t dim,
                                  uint32_t k, uint64_t seed) {
  const size_t shards = shard_count(n, kRowShard);

  std::vector<uint64_t> row_hash(n);
  parallel_shards(n, kRowShard, [&](size_t, uint64_t begin, uint64_t end) {
    for (uint64_t i = begin; i < end; ++i) {
      row_hash[i] = hash_bytes(rows.data() + i * dim, sizeof(float) * dim, seed);
    }
  });

  std::vector<float> centroids(static_cast<size_t>(k) * dim);
  std::vector<float> min_d(n, std::numeric_limits<float>::max());
  std::vector<char> chosen(n, 0);
  std::vector<BestEntry> best(shards);

  auto key_u = [&](uint64_t i, uint64_t step) {
    const uint64_t bits = mix64(row_hash[i] ^ mix_seed({seed, step, 0x6b6579ULL}));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  };

  for (uint32_t t = 0; t < k; ++t) {
    for (auto& b : best) b = BestEntry{};
    if (t == 0) {
      parallel_shards(n, kRowShard, [&](size_t s, uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
          const double u = key_u(i, t);
          if (u > best[s].key) best[s] = {u, i};
        }
      });
    } else {
      parallel_shards(n, kRowShard, [&](size_t s, uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
          if (min_d[i] <= 0.0f) continue;
          const double key = std::log(key_u(i, t)) / static_cast<double>(min_d[i]);
          if (key > best[s].key) best[s] = {key, i};
        }
      });
    }
    BestEntry overall;
    for (const auto& b : best) {
      if (b.key > overall.key) overall = b;
    }
    uint64_t pick = overall.index;
    if (pick == std::numeric_limits<uint64_t>::max()) {
      // Every remaining row coincides with a chosen center (duplicates);
      // fall back to the lowest unchosen index. Repair sorts out any empty
      // clusters this produces.
      for (uint64_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = 1;
    const float* src = rows.data() + pick * dim;
    float* dst = centroids.data() + static_cast<size_t>(t) * dim;
    std::copy(src, src + dim, dst);

    parallel_shards(n, kRowShard, [&](size_t, uint64_t begin, uint64_t end) {
      for (uint64_t i = begin; i < end; ++i) {
        const float d = dist_sq(rows.data() + i * dim, dst, dim);
        if (d < min_d[i]) min_d[i] = d;
      }
    });
  }
  return centroids;
}

}  // namespace

double mean_row_norm(std::span<const float> rows, uint64_t n, uint32_t dim) {
  if (n == 0) return 0.0;
  const size_t shards = shard_count(n, kRowShard);
  std::vector<double> partial(shards, 0.0);
  parallel_shards(n, kRowShard, [&](size_t s, uint64_t begin, uint64_t end) {
    double acc = 0.0;
    for (uint64_t i = begin; i < end; ++i) {
      double sumsq = 0.0;
      const float* row = rows.data() + i * dim;
      for (uint32_t j = 0; j < dim; ++j) sumsq += static_cast<double>(row[j]) * row[j];
      acc += std::sqrt(sumsq);
    }
    partial[s] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(n);
}

std::vector<uint32_t> assign_to_centroids(std::span<const float> rows, uint64_t n,
                                          std::span<const float> centroids, uint32_t k,
                                          uint32_t dim) {
  if (k == 0) fail(errc::invalid_input, "no centroids to assign to");
  if (rows.size() != n * dim || centroids.size() != static_cast<size_t>(k) * dim) {
    fail(errc::dimension_mismatch, "rows/centroids do not match the stated dimensions");
  }
  std::vector<uint32_t> assignment(n);
  parallel_shards(n, kRowShard, [&](size_t, uint64_t begin, uint64_t end) {
    float scratch;
    for (uint64_t i = begin; i < end; ++i) {
      assignment[i] = nearest(rows.data() + i * dim, centroids.data(), k, dim, &scratch);
    }
  });
  return assignment;
}

KMeansResult kmeans_fit(std::span<const float> rows, uint64_t n, uint32_t dim,
                        const KMeansConfig& config) {
  if (config.k == 0) fail(errc::invalid_config, "k must be positive");
  if (dim == 0) fail(errc::invalid_config, "dim must be positive");
  if (rows.size() != n * dim) {
    fail(errc::dimension_mismatch, "row buffer does not match n*dim");
  }
  if (n < config.k) {
    fail(errc::too_few_rows, "k=" + std::to_string(config.k) + " exceeds row count " +
                                 std::to_string(n));
  }
  if (config.tol && *config.tol < 0.0) fail(errc::invalid_config, "tol must be >= 0");

  const uint32_t k = config.k;
  const double tol = config.tol ? *config.tol : 1e-4 * mean_row_norm(rows, n, dim);

  KMeansResult res;
  res.k = k;
  res.dim = dim;
  res.centroids = (config.seeding == Seeding::plus_plus)
                      ? seed_plus_plus(rows, n, dim, k, config.seed)
                      : seed_random_rows(rows, n, dim, k, config.seed);
  res.assignment.assign(n, 0);

  std::vector<float> dists(n, 0.0f);
  std::vector<uint64_t> counts(k, 0);
  std::vector<double> sums(static_cast<size_t>(k) * dim, 0.0);
  std::vector<float> updated(static_cast<size_t>(k) * dim, 0.0f);

  for (uint32_t iter = 1; iter <= config.max_iters; ++iter) {
    assign_pass(rows, n, dim, res.centroids, k, res.assignment, dists);
    repair_empty_clusters(rows, n, dim, res.centroids, k, res.assignment, dists, counts);
    res.inertia_history.push_back(total_inertia(dists, n));
    res.iterations_run = iter;

    std::fill(sums.begin(), sums.end(), 0.0);
    for (uint64_t i = 0; i < n; ++i) {
      const float* row = rows.data() + i * dim;
      double* dst = sums.data() + static_cast<size_t>(res.assignment[i]) * dim;
      for (uint32_t j = 0; j < dim; ++j) dst[j] += row[j];
    }
    double displacement = 0.0;
    for (uint32_t c = 0; c < k; ++c) {
      const double inv = 1.0 / static_cast<double>(counts[c]);
      double moved_sq = 0.0;
      for (uint32_t j = 0; j < dim; ++j) {
        const size_t idx = static_cast<size_t>(c) * dim + j;
        const float v = static_cast<float>(sums[idx] * inv);
        const double diff = static_cast<double>(v) - res.centroids[idx];
        moved_sq += diff * diff;
        updated[idx] = v;
      }
      displacement += std::sqrt(moved_sq);
    }
    displacement /= static_cast<double>(k);
    res.centroids.swap(updated);

    if (displacement < tol) {
      res.converged = true;
      break;
    }
  }

  // Final pass so the reported assignment matches the final centroids.
  assign_pass(rows, n, dim, res.centroids, k, res.assignment, dists);
  repair_empty_clusters(rows, n, dim, res.centroids, k, res.assignment, dists, counts);
  res.inertia = total_inertia(dists, n);
  res.inertia_history.push_back(res.inertia);
  return res;
}

}  // namespace curatree
