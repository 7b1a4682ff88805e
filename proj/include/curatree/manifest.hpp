#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace curatree {

// Reproducibility record written next to every artifact a command produces
// (suffix ".manifest.json"). Identical inputs + flags + seed give identical
// manifests except for wall_time_seconds.
struct RunManifest {
  std::string command;
  std::string config_json;  // snapshot of the effective flags, serialized
  std::map<std::string, std::string> input_digests;  // path -> 64-bit hash, hex
  uint64_t seed = 0;
  std::string tool_version;
  double wall_time_seconds = 0.0;
};

// 64-bit content hash of a file, streamed.
uint64_t file_digest64(const std::filesystem::path& path);
std::string digest_hex(uint64_t digest);

void write_manifest(const std::filesystem::path& artifact_path, const RunManifest& manifest);

}  // namespace curatree
