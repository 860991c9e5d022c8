#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mrnav/datagen.hpp"
#include "mrnav/neural/train.hpp"

namespace mrnav {

/// Flat `key = value` configuration file ('#' starts a comment, vectors are
/// whitespace-separated numbers). Every key must belong to the documented
/// schema; unknown keys raise ConfigError naming the key.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& key) const;
  /// Override or insert a value (CLI flags beat file values).
  void set(const std::string& key, const std::string& value);

  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  double require_double(const std::string& key) const;
  int require_int(const std::string& key) const;

  /// All key/value pairs in key order (for the manifest echo).
  std::vector<std::pair<std::string, std::string>> items() const;

 private:
  void validate_known_keys() const;
  std::map<std::string, std::string> values_;
};

/// Assemble the world/limits/planner/simulation configuration. mpc.dt and
/// the planner's robot radius are taken from the world section so the two can
/// never disagree. Requires sim.n_sim_steps when `require_steps` is set.
SimRunConfig load_sim_run_config(const ConfigFile& cfg, bool require_steps);

neural::TrainConfig load_train_config(const ConfigFile& cfg);
neural::ModelDims load_model_dims(const ConfigFile& cfg);

}  // namespace mrnav
