#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace curatree {

// Dense row-major collection of f32 vectors. Immutable once loaded; safe for
// concurrent readers.
struct EmbeddingMatrix {
  uint64_t count = 0;
  uint32_t dim = 0;
  bool normalized = false;
  std::vector<float> data;  // count * dim, row-major

  std::span<const float> row(uint64_t i) const {
    return {data.data() + i * dim, dim};
  }
  std::span<const float> rows() const { return {data.data(), data.size()}; }
};

struct RowMetadata {
  uint64_t row_index = 0;
  std::string tile_id;
  std::string slide_id;
  std::string source;
  std::map<std::string, std::string> extra;
};

// EMB1 container: magic "EMB1", u32 version=1, u64 count, u32 dim,
// u8 dtype (0 = f32), 7 zero bytes, then count*dim little-endian f32
// row-major. Loading streams row chunks straight into the destination
// buffer, so transient memory stays a constant multiple of one row.
//
// With normalize=true each row is divided by its L2 norm; rows with zero
// norm are rejected (ZeroNormRow). Non-finite values are rejected either
// way, with the offending row reported.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, bool normalize);

// Writes the matrix exactly as held in memory. load(normalize=false)
// followed by save reproduces the input file byte for byte.
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

// Metadata sidecar: UTF-8, one JSON object per line with keys row_index,
// tile_id, slide_id, source and an optional string map "extra". Records may
// appear in any order; the result is returned in row order and must cover
// [0, expected_count) exactly.
std::vector<RowMetadata> load_metadata(const std::filesystem::path& path,
                                       uint64_t expected_count);

void save_metadata(const std::filesystem::path& path,
                   const std::vector<RowMetadata>& records);

}  // namespace curatree
