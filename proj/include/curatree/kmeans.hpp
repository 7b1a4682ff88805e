#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "curatree/embeddings.hpp"

namespace curatree {

enum class Seeding {
  random_rows,  // k distinct rows; cheap, row-order dependent
  plus_plus,    // D^2-weighted; keys derive from row values, so the choice
                // of centers does not depend on row order
};

struct KMeansConfig {
  uint32_t k = 1;
  uint32_t max_iters = 50;
  // Mean centroid displacement threshold. Unset means 1e-4 of the mean row
  // norm of the input, which adapts the stop rule to the data scale.
  std::optional<double> tol;
  uint64_t seed = 0;
  Seeding seeding = Seeding::plus_plus;
};

struct KMeansResult {
  uint32_t k = 0;
  uint32_t dim = 0;
  std::vector<float> centroids;      // k * dim
  std::vector<uint32_t> assignment;  // one entry per row, in [0, k)
  double inertia = 0.0;              // sum of squared assigned distances
  uint32_t iterations_run = 0;
  bool converged = false;
  // Inertia recorded after each assignment pass (post empty-cluster repair);
  // non-increasing by construction of Lloyd's algorithm.
  std::vector<double> inertia_history;
};

// Lloyd's algorithm over squared Euclidean distance. Deterministic given
// (rows, config) regardless of worker count. Duplicate rows are fine; empty
// clusters are repaired by reseeding onto the row farthest from its centroid
// within the largest cluster, so every cluster ends non-empty.
KMeansResult kmeans_fit(std::span<const float> rows, uint64_t n, uint32_t dim,
                        const KMeansConfig& config);

inline KMeansResult kmeans_fit(const EmbeddingMatrix& data, const KMeansConfig& config) {
  return kmeans_fit(data.rows(), data.count, data.dim, config);
}

// Nearest centroid per row under squared Euclidean distance; ties go to the
// lowest centroid index.
std::vector<uint32_t> assign_to_centroids(std::span<const float> rows, uint64_t n,
                                          std::span<const float> centroids, uint32_t k,
                                          uint32_t dim);

double mean_row_norm(std::span<const float> rows, uint64_t n, uint32_t dim);

}  // namespace curatree
