#include "curatree/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "curatree/error.hpp"
#include "curatree/rng.hpp"

namespace curatree {

uint64_t file_digest64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::not_found, "cannot open file for digest: " + path.string());
  uint64_t digest = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      digest ^= static_cast<unsigned char>(buf[i]);
      digest *= 0x100000001b3ULL;
    }
  }
  return mix64(digest);
}

std::string digest_hex(uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

void write_manifest(const std::filesystem::path& artifact_path, const RunManifest& manifest) {
  nlohmann::json j{
      {"command", manifest.command},
      {"config", nlohmann::json::parse(manifest.config_json)},
      {"input_digests", manifest.input_digests},
      {"seed", manifest.seed},
      {"tool_version", manifest.tool_version},
      {"wall_time_seconds", manifest.wall_time_seconds},
  };
  const auto path = artifact_path.string() + ".manifest.json";
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write manifest: " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(errc::io_error, "error writing manifest: " + path);
}

}  // namespace curatree
