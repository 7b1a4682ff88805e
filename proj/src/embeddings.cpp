#include "curatree/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "curatree/error.hpp"

namespace curatree {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;
constexpr uint64_t kRowChunk = 4096;  // rows per fread

}  // namespace

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, bool normalize) {
  io::FileReader in(path);
  io::check_magic(in, kMagic, "EMB1");

  const uint32_t version = in.u32(errc::truncated_file, "embedding header cut short");
  if (version != kVersion) {
    fail(errc::version_mismatch,
         "embedding file version " + std::to_string(version) + " unsupported");
  }
  EmbeddingMatrix m;
  m.count = in.u64(errc::truncated_file, "embedding header cut short");
  const uint32_t dim = in.u32(errc::truncated_file, "embedding header cut short");
  if (dim == 0) fail(errc::invalid_input, "embedding dim must be positive");
  m.dim = dim;
  const uint8_t dtype = in.u8(errc::truncated_file, "embedding header cut short");
  if (dtype != kDtypeF32) {
    fail(errc::unsupported_dtype, "dtype " + std::to_string(dtype) + " rejected, only f32 (0)");
  }
  uint8_t pad[7];
  in.read_exact(pad, 7, errc::truncated_file, "embedding header cut short");

  if (m.count > std::numeric_limits<uint64_t>::max() / dim / sizeof(float)) {
    fail(errc::invalid_input, "embedding payload size overflows");
  }
  m.data.resize(m.count * dim);
  m.normalized = normalize;

  for (uint64_t start = 0; start < m.count; start += kRowChunk) {
    const uint64_t rows = std::min(kRowChunk, m.count - start);
    float* dst = m.data.data() + start * dim;
    in.f32_array(dst, rows * dim,
                 errc::truncated_file, "embedding payload shorter than count*dim");

    for (uint64_t r = 0; r < rows; ++r) {
      float* row = dst + r * dim;
      double sumsq = 0.0;
      for (uint32_t j = 0; j < dim; ++j) {
        if (!std::isfinite(row[j])) {
          fail(errc::non_finite_value,
               "non-finite value at row " + std::to_string(start + r));
        }
        sumsq += static_cast<double>(row[j]) * row[j];
      }
      if (normalize) {
        const double norm = std::sqrt(sumsq);
        if (norm < 1e-30) {
          fail(errc::zero_norm_row,
               "row " + std::to_string(start + r) + " has zero norm, cannot normalize");
        }
        const float inv = static_cast<float>(1.0 / norm);
        for (uint32_t j = 0; j < dim; ++j) row[j] *= inv;
      }
    }
  }
  return m;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  io::FileWriter out(path);
  out.write(kMagic, 4);
  out.u32(kVersion);
  out.u64(matrix.count);
  out.u32(matrix.dim);
  out.u8(kDtypeF32);
  const uint8_t pad[7] = {0, 0, 0, 0, 0, 0, 0};
  out.write(pad, 7);
  out.f32_array(matrix.data.data(), matrix.data.size());
  out.close();
}

std::vector<RowMetadata> load_metadata(const std::filesystem::path& path,
                                       uint64_t expected_count) {
  std::ifstream in(path);
  if (!in) fail(errc::not_found, "cannot open metadata file: " + path.string());

  std::vector<RowMetadata> records(expected_count);
  std::vector<bool> seen(expected_count, false);
  uint64_t parsed = 0;

  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      fail(errc::malformed_record, "metadata line " + std::to_string(line_no) + " is not a JSON object");
    }
    RowMetadata rec;
    try {
      rec.row_index = j.at("row_index").get<uint64_t>();
      rec.tile_id = j.at("tile_id").get<std::string>();
      rec.slide_id = j.at("slide_id").get<std::string>();
      rec.source = j.at("source").get<std::string>();
      if (j.contains("extra")) {
        rec.extra = j.at("extra").get<std::map<std::string, std::string>>();
      }
    } catch (const nlohmann::json::exception&) {
      fail(errc::malformed_record,
           "metadata line " + std::to_string(line_no) + " has missing or mistyped fields");
    }
    if (rec.row_index >= expected_count) {
      fail(errc::malformed_record,
           "metadata line " + std::to_string(line_no) + " row_index " +
               std::to_string(rec.row_index) + " out of range [0, " +
               std::to_string(expected_count) + ")");
    }
    if (seen[rec.row_index]) {
      fail(errc::duplicate_row_index,
           "duplicate row_index " + std::to_string(rec.row_index) + " at line " +
               std::to_string(line_no));
    }
    seen[rec.row_index] = true;
    records[rec.row_index] = std::move(rec);
    ++parsed;
  }

  if (parsed != expected_count) {
    fail(errc::count_mismatch, "metadata has " + std::to_string(parsed) +
                                   " records, expected " + std::to_string(expected_count));
  }
  return records;
}

void save_metadata(const std::filesystem::path& path,
                   const std::vector<RowMetadata>& records) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot open metadata file for writing: " + path.string());
  for (const auto& rec : records) {
    nlohmann::json j{{"row_index", rec.row_index},
                     {"tile_id", rec.tile_id},
                     {"slide_id", rec.slide_id},
                     {"source", rec.source}};
    if (!rec.extra.empty()) j["extra"] = rec.extra;
    out << j.dump() << '\n';
  }
  if (!out) fail(errc::io_error, "error writing metadata to " + path.string());
}

}  // namespace curatree
