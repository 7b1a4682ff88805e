#pragma once

// Little-endian scalar and array IO shared by the file formats (EMB1, HCT1,
// CSS1, LGR1). Serialization is byte-shifted rather than memcpy'd so the
// on-disk layout never depends on host endianness.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "curatree/error.hpp"

namespace curatree::io {

class FileReader {
 public:
  explicit FileReader(const std::filesystem::path& path) : path_(path.string()) {
    file_ = std::fopen(path_.c_str(), "rb");
    if (!file_) fail(errc::not_found, "cannot open file for reading: " + path_);
  }
  ~FileReader() {
    if (file_) std::fclose(file_);
  }
  FileReader(const FileReader&) = delete;
  FileReader& operator=(const FileReader&) = delete;

  // Reads exactly n bytes or throws `code`.
  void read_exact(void* dst, size_t n, errc code, const std::string& what) {
    if (std::fread(dst, 1, n, file_) != n) {
      fail(code, what + " in " + path_);
    }
  }

  bool try_read(void* dst, size_t n) { return std::fread(dst, 1, n, file_) == n; }

  uint8_t u8(errc code, const std::string& what) {
    uint8_t b;
    read_exact(&b, 1, code, what);
    return b;
  }
  uint32_t u32(errc code, const std::string& what) {
    unsigned char b[4];
    read_exact(b, 4, code, what);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
  }
  uint64_t u64(errc code, const std::string& what) {
    unsigned char b[8];
    read_exact(b, 8, code, what);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  // Bulk payloads are read straight into the destination buffer; f32/u32/u64
  // arrays are stored little-endian which matches every supported host.
  static_assert(std::endian::native == std::endian::little,
                "bulk array IO assumes a little-endian host");

  void f32_array(float* dst, size_t n, errc code, const std::string& what) {
    read_exact(dst, n * sizeof(float), code, what);
  }
  void u32_array(uint32_t* dst, size_t n, errc code, const std::string& what) {
    read_exact(dst, n * sizeof(uint32_t), code, what);
  }
  void u64_array(uint64_t* dst, size_t n, errc code, const std::string& what) {
    read_exact(dst, n * sizeof(uint64_t), code, what);
  }

  const std::string& path() const { return path_; }
  std::FILE* handle() { return file_; }

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

class FileWriter {
 public:
  explicit FileWriter(const std::filesystem::path& path) : path_(path.string()) {
    file_ = std::fopen(path_.c_str(), "wb");
    if (!file_) fail(errc::io_error, "cannot open file for writing: " + path_);
  }
  ~FileWriter() {
    if (file_) std::fclose(file_);
  }
  FileWriter(const FileWriter&) = delete;
  FileWriter& operator=(const FileWriter&) = delete;

  void write(const void* src, size_t n) {
    if (std::fwrite(src, 1, n, file_) != n) {
      fail(errc::io_error, "short write to " + path_);
    }
  }

  void u8(uint8_t v) { write(&v, 1); }
  void u32(uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    write(b, 4);
  }
  void u64(uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    write(b, 8);
  }
  void f32_array(const float* src, size_t n) { write(src, n * sizeof(float)); }
  void u32_array(const uint32_t* src, size_t n) { write(src, n * sizeof(uint32_t)); }
  void u64_array(const uint64_t* src, size_t n) { write(src, n * sizeof(uint64_t)); }

  void close() {
    if (file_) {
      if (std::fclose(file_) != 0) {
        file_ = nullptr;
        fail(errc::io_error, "error closing " + path_);
      }
      file_ = nullptr;
    }
  }

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

inline void check_magic(FileReader& in, const char expected[4], const std::string& format) {
  char magic[4];
  if (!in.try_read(magic, 4) || std::memcmp(magic, expected, 4) != 0) {
    fail(errc::bad_magic, "not a " + format + " file: " + in.path());
  }
}

}  // namespace curatree::io
