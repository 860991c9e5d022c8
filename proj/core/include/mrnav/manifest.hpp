#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mrnav {

inline constexpr const char* kToolVersion = "mrnav 0.1.0";

std::uint64_t fnv1a_hash(std::string_view data);
std::uint64_t fnv1a_hash_file(const std::filesystem::path& path);

/// Provenance sidecar written next to every produced artifact. Artifacts
/// embed hash() in their headers; hash() covers everything except the
/// timestamp so artifact bytes stay reproducible.
struct PipelineManifest {
  std::string tool;          // subcommand name
  std::string tool_version = kToolVersion;
  std::vector<std::pair<std::string, std::string>> config_echo;  // effective config
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path -> content hash (hex)
  std::vector<std::string> outputs;

  std::uint64_t hash() const;
  void write(const std::filesystem::path& path) const;  // JSON, includes a timestamp
};

}  // namespace mrnav
