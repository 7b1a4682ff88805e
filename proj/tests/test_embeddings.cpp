#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "curatree/embeddings.hpp"
#include "curatree/error.hpp"
#include "curatree/rng.hpp"
#include "test_util.hpp"

using namespace curatree;
using testutil::TempDir;

namespace {

EmbeddingMatrix random_matrix(uint64_t count, uint32_t dim, uint64_t seed) {
  EmbeddingMatrix m;
  m.count = count;
  m.dim = dim;
  m.data.resize(count * dim);
  Rng rng(seed);
  for (auto& v : m.data) v = static_cast<float>(rng.gaussian());
  return m;
}

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a curatree::Error");
  return errc::internal;
}

}  // namespace

TEST_CASE("empty file loads as a valid empty matrix") {
  TempDir dir("emb_empty");
  EmbeddingMatrix empty;
  empty.dim = 16;
  save_embeddings(dir.file("e.emb"), empty);

  const auto loaded = load_embeddings(dir.file("e.emb"), false);
  CHECK(loaded.count == 0);
  CHECK(loaded.dim == 16);
  CHECK(loaded.data.empty());
}

TEST_CASE("normalization divides rows by their L2 norm") {
  TempDir dir("emb_norm");
  EmbeddingMatrix m;
  m.count = 3;
  m.dim = 2;
  m.data = {3.0f, 4.0f, 1.0f, 0.0f, 0.0f, 2.0f};
  save_embeddings(dir.file("e.emb"), m);

  const auto loaded = load_embeddings(dir.file("e.emb"), true);
  CHECK(loaded.normalized);
  CHECK(loaded.data[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(loaded.data[1] == doctest::Approx(0.8).epsilon(1e-6));
  for (uint64_t i = 0; i < loaded.count; ++i) {
    double norm = 0.0;
    for (uint32_t j = 0; j < loaded.dim; ++j) {
      norm += static_cast<double>(loaded.row(i)[j]) * loaded.row(i)[j];
    }
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-4);
  }
}

TEST_CASE("truncated payload is rejected with TruncatedFile") {
  TempDir dir("emb_trunc");
  const auto m = random_matrix(5, 4, 7);
  save_embeddings(dir.file("e.emb"), m);
  // Keep the header and only 4 of the 5 rows.
  std::filesystem::resize_file(dir.file("e.emb"), 28 + 4 * 4 * sizeof(float));

  CHECK(code_of([&] { load_embeddings(dir.file("e.emb"), false); }) == errc::truncated_file);
}

TEST_CASE("wrong magic and wrong version are distinguished") {
  TempDir dir("emb_magic");
  {
    std::ofstream out(dir.file("junk.bin"), std::ios::binary);
    out << "this is not an embedding file at all";
  }
  CHECK(code_of([&] { load_embeddings(dir.file("junk.bin"), false); }) == errc::bad_magic);

  save_embeddings(dir.file("v.emb"), random_matrix(2, 2, 1));
  {
    std::fstream f(dir.file("v.emb"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const uint32_t bad_version = 99;
    f.write(reinterpret_cast<const char*>(&bad_version), 4);
  }
  CHECK(code_of([&] { load_embeddings(dir.file("v.emb"), false); }) == errc::version_mismatch);

  CHECK(code_of([&] { load_embeddings(dir.file("missing.emb"), false); }) == errc::not_found);
}

TEST_CASE("non-finite values are rejected with the row reported") {
  TempDir dir("emb_nan");
  auto m = random_matrix(4, 3, 3);
  m.data[2 * 3 + 1] = std::nanf("");
  save_embeddings(dir.file("e.emb"), m);

  try {
    load_embeddings(dir.file("e.emb"), false);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_finite_value);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("zero rows only fail under normalization") {
  TempDir dir("emb_zero");
  auto m = random_matrix(3, 2, 5);
  m.data[2] = 0.0f;
  m.data[3] = 0.0f;
  save_embeddings(dir.file("e.emb"), m);

  CHECK_NOTHROW(load_embeddings(dir.file("e.emb"), false));
  CHECK(code_of([&] { load_embeddings(dir.file("e.emb"), true); }) == errc::zero_norm_row);
}

TEST_CASE("unsupported dtype is rejected") {
  TempDir dir("emb_dtype");
  save_embeddings(dir.file("e.emb"), random_matrix(2, 2, 9));
  {
    std::fstream f(dir.file("e.emb"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);  // magic(4) + version(4) + count(8) + dim(4)
    const char dtype = 1;
    f.write(&dtype, 1);
  }
  CHECK(code_of([&] { load_embeddings(dir.file("e.emb"), false); }) == errc::unsupported_dtype);
}

TEST_CASE("round-trip is byte identical for valid files") {
  TempDir dir("emb_rt");
  for (uint64_t count : {0ull, 1ull, 17ull, 300ull}) {
    const auto m = random_matrix(count, 16, count + 11);
    save_embeddings(dir.file("a.emb"), m);
    const auto loaded = load_embeddings(dir.file("a.emb"), false);
    save_embeddings(dir.file("b.emb"), loaded);
    CHECK(testutil::read_file_bytes(dir.file("a.emb")) ==
          testutil::read_file_bytes(dir.file("b.emb")));
  }
}

TEST_CASE("loaded rows equal the little-endian payload bytes") {
  TempDir dir("emb_bytes");
  const auto m = random_matrix(10, 6, 21);
  save_embeddings(dir.file("e.emb"), m);
  const auto loaded = load_embeddings(dir.file("e.emb"), false);
  const auto bytes = testutil::read_file_bytes(dir.file("e.emb"));

  for (uint64_t i : {0ull, 3ull, 9ull}) {
    const size_t offset = 28 + i * 6 * sizeof(float);
    CHECK(std::memcmp(loaded.row(i).data(), bytes.data() + offset, 6 * sizeof(float)) == 0);
  }
}

TEST_CASE("metadata sidecar parses, validates and round-trips") {
  TempDir dir("meta");
  std::vector<RowMetadata> records(3);
  for (uint64_t i = 0; i < 3; ++i) {
    records[i].row_index = i;
    records[i].tile_id = "tile_" + std::to_string(i);
    records[i].slide_id = "slide_A";
    records[i].source = "cohort1";
  }
  records[1].extra = {{"stain", "he"}, {"site", "colon"}};
  save_metadata(dir.file("m.jsonl"), records);

  const auto loaded = load_metadata(dir.file("m.jsonl"), 3);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[1].tile_id == "tile_1");
  CHECK(loaded[1].extra.at("stain") == "he");

  CHECK(code_of([&] { load_metadata(dir.file("m.jsonl"), 4); }) == errc::count_mismatch);

  {
    std::ofstream out(dir.file("dup.jsonl"));
    out << R"({"row_index":0,"tile_id":"t0","slide_id":"s","source":"c"})" << "\n";
    out << R"({"row_index":0,"tile_id":"t1","slide_id":"s","source":"c"})" << "\n";
  }
  CHECK(code_of([&] { load_metadata(dir.file("dup.jsonl"), 2); }) == errc::duplicate_row_index);

  {
    std::ofstream out(dir.file("bad.jsonl"));
    out << R"({"row_index":0,"tile_id":"t0","slide_id":"s","source":"c"})" << "\n";
    out << "not json at all\n";
  }
  try {
    load_metadata(dir.file("bad.jsonl"), 2);
    FAIL("expected MalformedRecord");
  } catch (const Error& e) {
    CHECK(e.code() == errc::malformed_record);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  {
    std::ofstream out(dir.file("range.jsonl"));
    out << R"({"row_index":7,"tile_id":"t0","slide_id":"s","source":"c"})" << "\n";
  }
  CHECK(code_of([&] { load_metadata(dir.file("range.jsonl"), 1); }) == errc::malformed_record);
}
