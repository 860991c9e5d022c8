#include "mrnav/manifest.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mrnav/errors.hpp"

namespace mrnav {

std::uint64_t fnv1a_hash(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t fnv1a_hash_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot hash missing file: " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return fnv1a_hash(buffer.str());
}

std::uint64_t PipelineManifest::hash() const {
  std::ostringstream canon;
  canon << tool << '\n' << tool_version << '\n' << seed << '\n';
  for (const auto& [key, value] : config_echo) canon << key << '=' << value << '\n';
  for (const auto& [path, digest] : inputs) canon << path << ':' << digest << '\n';
  for (const auto& out : outputs) canon << out << '\n';
  return fnv1a_hash(canon.str());
}

void PipelineManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["tool"] = tool;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["config"] = nlohmann::json::object();
  for (const auto& [key, value] : config_echo) j["config"][key] = value;
  j["inputs"] = nlohmann::json::object();
  for (const auto& [in, digest] : inputs) j["inputs"][in] = digest;
  j["outputs"] = outputs;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash()));
  j["manifest_hash"] = hex;
  const auto now = std::chrono::system_clock::now();
  j["created_at_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                             now.time_since_epoch())
                             .count();

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write manifest: " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace mrnav
