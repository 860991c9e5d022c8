#include "mrnav/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "mrnav/errors.hpp"

namespace mrnav {
namespace {

constexpr std::array kKnownKeys = {
    "world.extent_min",      "world.extent_max",      "world.robot_radius",
    "world.obstacle_semi_axes", "world.n_robots",     "world.n_obstacles",
    "world.dt",              "world.rng_seed",
    "limits.v_max",          "limits.u_max",
    "mpc.horizon_steps",     "mpc.weight_goal",       "mpc.weight_input",
    "mpc.weight_slack_lin",  "mpc.weight_slack_quad", "mpc.sqp_iterations",
    "mpc.trust_region",      "mpc.safety_margin",
    "sim.n_sim_steps",       "sim.goal_tolerance",    "sim.obstacle_noise_std",
    "sim.rng_seed",
    "predict.t_obs",         "predict.t_horizon",
    "model.query_hidden",    "model.branch_hidden",   "model.decoder_hidden",
    "model.dense_decoder",
    "train.learning_rate",   "train.batch_size",      "train.epochs",
    "train.l2_lambda",       "train.truncation_depth", "train.rng_seed",
    "train.validation_fraction", "train.patience",
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    }
    cfg.values_[key] = value;
  }
  cfg.validate_known_keys();
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_string(buffer.str());
}

void ConfigFile::validate_known_keys() const {
  for (const auto& [key, value] : values_) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

void ConfigFile::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  validate_known_keys();
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (trim(it->second.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': not a number: '" + it->second + "'");
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError("config key '" + key + "': expected an integer");
  }
  return i;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer");
  }
}

Vec3 ConfigFile::get_vec3(const std::string& key, const Vec3& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::istringstream is(it->second);
  Vec3 v;
  if (is >> v(0) >> v(1) >> v(2)) {
    std::string rest;
    if (!(is >> rest)) return v;
  }
  throw ConfigError("config key '" + key + "': expected three numbers");
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::require_double(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required field " + key);
  return get_double(key, 0.0);
}

int ConfigFile::require_int(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required field " + key);
  return get_int(key, 0);
}

std::vector<std::pair<std::string, std::string>> ConfigFile::items() const {
  return {values_.begin(), values_.end()};
}

SimRunConfig load_sim_run_config(const ConfigFile& cfg, bool require_steps) {
  SimRunConfig out;
  out.world.extent_min = cfg.get_vec3("world.extent_min", out.world.extent_min);
  out.world.extent_max = cfg.get_vec3("world.extent_max", out.world.extent_max);
  out.world.robot_radius = cfg.get_double("world.robot_radius", out.world.robot_radius);
  out.world.obstacle_semi_axes =
      cfg.get_vec3("world.obstacle_semi_axes", out.world.obstacle_semi_axes);
  out.world.n_robots = cfg.get_int("world.n_robots", out.world.n_robots);
  out.world.n_obstacles = cfg.get_int("world.n_obstacles", out.world.n_obstacles);
  out.world.dt = cfg.get_double("world.dt", out.world.dt);
  out.world.rng_seed = cfg.get_u64("world.rng_seed", out.world.rng_seed);

  out.limits.v_max = cfg.get_double("limits.v_max", out.limits.v_max);
  out.limits.u_max = cfg.get_double("limits.u_max", out.limits.u_max);

  out.mpc.horizon_steps = cfg.get_int("mpc.horizon_steps", out.mpc.horizon_steps);
  out.mpc.dt = out.world.dt;
  out.mpc.robot_radius = out.world.robot_radius;
  out.mpc.weight_goal = cfg.get_double("mpc.weight_goal", out.mpc.weight_goal);
  out.mpc.weight_input = cfg.get_double("mpc.weight_input", out.mpc.weight_input);
  out.mpc.weight_slack_lin = cfg.get_double("mpc.weight_slack_lin", out.mpc.weight_slack_lin);
  out.mpc.weight_slack_quad = cfg.get_double("mpc.weight_slack_quad", out.mpc.weight_slack_quad);
  out.mpc.sqp_iterations = cfg.get_int("mpc.sqp_iterations", out.mpc.sqp_iterations);
  out.mpc.trust_region = cfg.get_double("mpc.trust_region", out.mpc.trust_region);
  out.mpc.safety_margin = cfg.get_double("mpc.safety_margin", out.mpc.safety_margin);

  out.n_sim_steps = require_steps ? cfg.require_int("sim.n_sim_steps")
                                  : cfg.get_int("sim.n_sim_steps", out.n_sim_steps);
  out.goal_tolerance = cfg.get_double("sim.goal_tolerance", out.goal_tolerance);
  out.obstacle_noise_std = cfg.get_double("sim.obstacle_noise_std", out.obstacle_noise_std);
  out.rng_seed = cfg.get_u64("sim.rng_seed", out.world.rng_seed);
  out.validate();
  return out;
}

neural::TrainConfig load_train_config(const ConfigFile& cfg) {
  neural::TrainConfig out;
  out.learning_rate = cfg.get_double("train.learning_rate", out.learning_rate);
  out.batch_size = cfg.get_int("train.batch_size", out.batch_size);
  out.epochs = cfg.get_int("train.epochs", out.epochs);
  out.l2_lambda = cfg.get_double("train.l2_lambda", out.l2_lambda);
  out.truncation_depth = cfg.get_int("train.truncation_depth", out.truncation_depth);
  out.rng_seed = cfg.get_u64("train.rng_seed", out.rng_seed);
  out.validation_fraction = cfg.get_double("train.validation_fraction", out.validation_fraction);
  out.patience = cfg.get_int("train.patience", out.patience);
  if (out.l2_lambda < 0.0) throw ConfigError("train.l2_lambda must be >= 0");
  if (out.validation_fraction < 0.0 || out.validation_fraction >= 1.0) {
    throw ConfigError("train.validation_fraction must be in [0, 1)");
  }
  return out;
}

neural::ModelDims load_model_dims(const ConfigFile& cfg) {
  neural::ModelDims dims;
  dims.query_hidden = cfg.get_int("model.query_hidden", dims.query_hidden);
  dims.branch_hidden = cfg.get_int("model.branch_hidden", dims.branch_hidden);
  dims.decoder_hidden = cfg.get_int("model.decoder_hidden", dims.decoder_hidden);
  dims.dense_decoder = cfg.get_int("model.dense_decoder", dims.dense_decoder);
  dims.t_obs = cfg.get_int("predict.t_obs", dims.t_obs);
  dims.t_horizon = cfg.get_int("predict.t_horizon", dims.t_horizon);
  return dims;
}

}  // namespace mrnav
