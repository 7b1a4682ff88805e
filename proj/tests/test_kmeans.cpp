#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "curatree/error.hpp"
#include "curatree/kmeans.hpp"
#include "curatree/rng.hpp"
#include "test_util.hpp"

using namespace curatree;

namespace {

EmbeddingMatrix matrix_of(std::vector<float> data, uint32_t dim) {
  EmbeddingMatrix m;
  m.dim = dim;
  m.count = data.size() / dim;
  m.data = std::move(data);
  return m;
}

EmbeddingMatrix random_rows(uint64_t n, uint32_t dim, uint64_t seed, double scale = 1.0) {
  EmbeddingMatrix m;
  m.count = n;
  m.dim = dim;
  m.data.resize(n * dim);
  Rng rng(seed);
  for (auto& v : m.data) v = static_cast<float>(scale * rng.gaussian());
  return m;
}

// Relative slack absorbing float rounding in the otherwise exact Lloyd
// monotonicity argument.
void check_monotone(const std::vector<double>& history) {
  for (size_t i = 1; i < history.size(); ++i) {
    CHECK(history[i] <= history[i - 1] * (1.0 + 1e-6) + 1e-9);
  }
}

}  // namespace

TEST_CASE("single cluster is the mean with hand-computed inertia") {
  const auto m = matrix_of({0, 0, 2, 0, 4, 0}, 2);
  KMeansConfig config;
  config.k = 1;
  const auto res = kmeans_fit(m, config);

  CHECK(res.centroids[0] == doctest::Approx(2.0));
  CHECK(res.centroids[1] == doctest::Approx(0.0));
  CHECK(res.inertia == doctest::Approx(8.0));  // 4 + 0 + 4
  CHECK(res.converged);
}

TEST_CASE("k equal to n gives zero inertia and the rows as centroids") {
  const auto m = random_rows(12, 3, 5);
  KMeansConfig config;
  config.k = 12;
  config.seed = 3;
  const auto res = kmeans_fit(m, config);

  CHECK(res.inertia == doctest::Approx(0.0));
  std::set<uint32_t> used(res.assignment.begin(), res.assignment.end());
  CHECK(used.size() == 12);
  // Every centroid must coincide with some row.
  for (uint32_t c = 0; c < 12; ++c) {
    bool found = false;
    for (uint64_t i = 0; i < m.count; ++i) {
      if (std::equal(m.row(i).begin(), m.row(i).end(),
                     res.centroids.begin() + static_cast<size_t>(c) * 3)) {
        found = true;
        break;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("two well-separated blobs are recovered almost perfectly") {
  const auto blobs = testutil::make_blobs({{0.0f, 0.0f}, {10.0f, 0.0f}}, 200, 1.0f, 17);
  KMeansConfig config;
  config.k = 2;
  config.seed = 5;
  const auto res = kmeans_fit(blobs.matrix, config);

  uint64_t straight = 0;
  uint64_t flipped = 0;
  for (uint64_t i = 0; i < blobs.matrix.count; ++i) {
    if (res.assignment[i] == blobs.labels[i]) straight++;
    if (res.assignment[i] == 1 - blobs.labels[i]) flipped++;
  }
  const double agreement =
      static_cast<double>(std::max(straight, flipped)) / static_cast<double>(blobs.matrix.count);
  CHECK(agreement >= 0.99);
}

TEST_CASE("assignment matches the exhaustive-scan oracle and tie-break rule") {
  // A row sitting exactly on a centroid.
  {
    const std::vector<float> centroids{0, 1, 2, 3, 4};
    const std::vector<float> row{3.0f};
    const auto got = assign_to_centroids(row, 1, centroids, 5, 1);
    CHECK(got[0] == 3);
  }
  // Equidistant from centroids 1 and 4: lowest index wins.
  {
    const std::vector<float> centroids{10, 1, 20, 30, 3};
    const std::vector<float> row{2.0f};
    const auto got = assign_to_centroids(row, 1, centroids, 5, 1);
    CHECK(got[0] == 1);
  }
  // 1000 random rows against 20 random centroids.
  {
    const auto rows = random_rows(1000, 8, 23);
    const auto cents = random_rows(20, 8, 29);
    const auto got = assign_to_centroids(rows.rows(), rows.count, cents.rows(), 20, 8);
    for (uint64_t i = 0; i < rows.count; ++i) {
      CHECK(got[i] == testutil::nearest_centroid_oracle(rows.row(i), cents.rows(), 20));
    }
  }
  CHECK_THROWS_AS(assign_to_centroids(std::vector<float>{1.0f}, 1,
                                      std::vector<float>{1.0f, 2.0f}, 2, 2),
                  Error);
}

TEST_CASE("inertia history is non-increasing on randomized inputs") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const uint64_t n = 30 + rng.below(200);
    const uint32_t dim = 2 + static_cast<uint32_t>(rng.below(6));
    const uint32_t k = 2 + static_cast<uint32_t>(rng.below(6));
    const auto m = random_rows(n, dim, seed * 13 + 1, 3.0);

    KMeansConfig config;
    config.k = k;
    config.seed = seed;
    config.seeding = (seed % 2 == 0) ? Seeding::plus_plus : Seeding::random_rows;
    const auto res = kmeans_fit(m, config);
    check_monotone(res.inertia_history);
  }
}

TEST_CASE("converged centroids equal the means of their assigned rows") {
  const auto m = random_rows(300, 4, 99, 2.0);
  KMeansConfig config;
  config.k = 5;
  config.seed = 7;
  config.tol = 1e-10;
  config.max_iters = 500;
  const auto res = kmeans_fit(m, config);
  REQUIRE(res.converged);

  std::vector<double> sums(5 * 4, 0.0);
  std::vector<uint64_t> counts(5, 0);
  for (uint64_t i = 0; i < m.count; ++i) {
    counts[res.assignment[i]]++;
    for (uint32_t j = 0; j < 4; ++j) {
      sums[res.assignment[i] * 4 + j] += m.row(i)[j];
    }
  }
  double recomputed_inertia = 0.0;
  for (uint64_t i = 0; i < m.count; ++i) {
    for (uint32_t j = 0; j < 4; ++j) {
      const double d = m.row(i)[j] - res.centroids[res.assignment[i] * 4 + j];
      recomputed_inertia += d * d;
    }
  }
  for (uint32_t c = 0; c < 5; ++c) {
    REQUIRE(counts[c] > 0);
    for (uint32_t j = 0; j < 4; ++j) {
      CHECK(std::abs(res.centroids[c * 4 + j] - sums[c * 4 + j] / counts[c]) <= 1e-5);
    }
  }
  CHECK(std::abs(res.inertia - recomputed_inertia) <= 1e-5 * std::max(1.0, recomputed_inertia));
}

TEST_CASE("duplicate-heavy data keeps every cluster populated through repair") {
  // Only three distinct values but five clusters: repair has to split ties.
  std::vector<float> data;
  for (int rep = 0; rep < 10; ++rep) {
    data.push_back(0.0f);
    data.push_back(5.0f);
    data.push_back(9.0f);
  }
  const auto m = matrix_of(std::move(data), 1);

  for (auto seeding : {Seeding::plus_plus, Seeding::random_rows}) {
    KMeansConfig config;
    config.k = 5;
    config.seed = 11;
    config.seeding = seeding;
    const auto res = kmeans_fit(m, config);
    std::vector<uint64_t> counts(5, 0);
    for (uint32_t a : res.assignment) counts[a]++;
    for (uint32_t c = 0; c < 5; ++c) CHECK(counts[c] >= 1);
    check_monotone(res.inertia_history);
  }
}

TEST_CASE("too few rows is an error") {
  const auto m = random_rows(3, 2, 1);
  KMeansConfig config;
  config.k = 5;
  try {
    kmeans_fit(m, config);
    FAIL("expected TooFewRows");
  } catch (const Error& e) {
    CHECK(e.code() == errc::too_few_rows);
  }
}

TEST_CASE("identical runs are bitwise identical regardless of worker count") {
  const auto m = random_rows(500, 6, 77, 2.0);
  KMeansConfig config;
  config.k = 7;
  config.seed = 13;

  setenv("CURATREE_THREADS", "1", 1);
  const auto a = kmeans_fit(m, config);
  setenv("CURATREE_THREADS", "4", 1);
  const auto b = kmeans_fit(m, config);
  unsetenv("CURATREE_THREADS");

  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("permuting rows permutes plus_plus assignments identically") {
  // Value-keyed seeding: the selected centers depend on row values only, so
  // the permuted run must produce the permuted assignment and the exact same
  // centroid array. Rows are quantized to a 1/16 lattice so the per-cluster
  // mean accumulation is exact and row order cannot leak in through float
  // rounding.
  auto m = random_rows(80, 3, 31, 2.0);
  for (auto& v : m.data) v = std::round(v * 16.0f) / 16.0f;

  std::vector<uint64_t> perm(m.count);
  for (uint64_t i = 0; i < m.count; ++i) perm[i] = i;
  Rng rng(555);
  for (uint64_t i = m.count; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  EmbeddingMatrix shuffled;
  shuffled.count = m.count;
  shuffled.dim = m.dim;
  shuffled.data.resize(m.data.size());
  for (uint64_t i = 0; i < m.count; ++i) {
    std::copy(m.row(perm[i]).begin(), m.row(perm[i]).end(),
              shuffled.data.begin() + i * m.dim);
  }

  KMeansConfig config;
  config.k = 6;
  config.seed = 3;
  config.seeding = Seeding::plus_plus;
  const auto base = kmeans_fit(m, config);
  const auto permuted = kmeans_fit(shuffled, config);

  CHECK(base.centroids == permuted.centroids);
  for (uint64_t i = 0; i < m.count; ++i) {
    CHECK(permuted.assignment[i] == base.assignment[perm[i]]);
  }
  CHECK(std::abs(base.inertia - permuted.inertia) <= 1e-6 * std::max(1.0, base.inertia));
}
