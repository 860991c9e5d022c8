#include "mrnav/datagen.hpp"

#include "mrnav/errors.hpp"

namespace mrnav {

void SimRunConfig::validate() const {
  world.validate();
  mpc.validate();
  if (n_sim_steps < 0) throw ConfigError("sim: n_sim_steps must be >= 0");
  if (goal_tolerance <= 0.0) throw ConfigError("sim: goal_tolerance must be > 0");
  if (obstacle_noise_std < 0.0) throw ConfigError("sim: obstacle_noise_std must be >= 0");
}

SimLog run_demonstration(const SimRunConfig& cfg) {
  cfg.validate();
  SimOptions options;
  options.mode = PlannerMode::CentralizedComm;
  options.goal_tolerance = cfg.goal_tolerance;
  options.obstacle_noise_std = cfg.obstacle_noise_std;
  options.randomize_goals = true;
  Simulator sim(cfg.world, cfg.mpc, cfg.limits, options, cfg.rng_seed);
  sim.spawn_random();
  sim.run(cfg.n_sim_steps);
  return sim.take_log();
}

DemonstrationResult run_demonstration_collision_free(const SimRunConfig& cfg, int max_attempts) {
  DemonstrationResult result;
  SimRunConfig attempt_cfg = cfg;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    result.attempts = attempt + 1;
    result.log = run_demonstration(attempt_cfg);
    if (!result.log.any_collision()) {
      result.collision_free = true;
      return result;
    }
    result.rejected_seeds.push_back(attempt_cfg.rng_seed);
    attempt_cfg.rng_seed += 0x9e3779b97f4a7c15ull;  // deterministic reseed
  }
  result.collision_free = false;
  return result;
}

std::vector<DatasetRecord> extract_dataset(const SimLog& log, int t_obs, int t_horizon) {
  if (t_obs < 1 || t_horizon < 1) {
    throw std::invalid_argument("extract_dataset: t_obs and t_horizon must be >= 1");
  }
  std::vector<DatasetRecord> records;
  const long n_ticks = static_cast<long>(log.ticks.size());
  const long first = t_obs;
  const long last = n_ticks - 1 - t_horizon;  // inclusive
  if (last < first) return records;
  records.reserve(static_cast<std::size_t>((last - first + 1) * log.n_robots));

  const double dt = log.dt;
  for (long t = first; t <= last; ++t) {
    for (int q = 0; q < log.n_robots; ++q) {
      const std::size_t qs = static_cast<std::size_t>(q);
      DatasetRecord rec;
      rec.robot_id = q;
      rec.tick = t;

      ObservationHistory& obs = rec.observation;
      const auto& now = log.ticks[static_cast<std::size_t>(t)];
      obs.ego_position = now.robots[qs].position;
      obs.ego_velocities.reserve(static_cast<std::size_t>(t_obs) + 1);
      obs.neighbor_rel_positions.assign(static_cast<std::size_t>(log.n_robots - 1), {});
      obs.neighbor_rel_velocities.assign(static_cast<std::size_t>(log.n_robots - 1), {});

      for (long h = t - t_obs; h <= t; ++h) {
        const auto& tick = log.ticks[static_cast<std::size_t>(h)];
        obs.ego_velocities.push_back(tick.robots[qs].velocity);
        std::size_t branch = 0;
        for (int j = 0; j < log.n_robots; ++j) {
          if (j == q) continue;
          const std::size_t js = static_cast<std::size_t>(j);
          obs.neighbor_rel_positions[branch].push_back(tick.robots[js].position -
                                                       tick.robots[qs].position);
          obs.neighbor_rel_velocities[branch].push_back(tick.robots[js].velocity -
                                                        tick.robots[qs].velocity);
          ++branch;
        }
      }
      for (int o = 0; o < log.n_obstacles; ++o) {
        const std::size_t os = static_cast<std::size_t>(o);
        obs.obstacle_rel_positions.push_back(now.obstacles[os].position -
                                             now.robots[qs].position);
        obs.obstacle_rel_velocities.push_back(now.obstacles[os].velocity -
                                              now.robots[qs].velocity);
      }

      rec.future_velocities.reserve(static_cast<std::size_t>(t_horizon));
      for (long k = 1; k <= t_horizon; ++k) {
        const Vec3& p_now = log.ticks[static_cast<std::size_t>(t + k)].robots[qs].position;
        const Vec3& p_prev = log.ticks[static_cast<std::size_t>(t + k - 1)].robots[qs].position;
        rec.future_velocities.push_back((p_now - p_prev) / dt);
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::vector<neural::TrainingSample> to_training_samples(
    const std::vector<DatasetRecord>& records) {
  std::vector<neural::TrainingSample> samples;
  samples.reserve(records.size());
  for (const auto& rec : records) {
    samples.push_back({rec.observation, rec.future_velocities});
  }
  return samples;
}

Dataset make_dataset(std::vector<DatasetRecord> records, double dt, int t_obs, int t_horizon,
                     std::uint64_t provenance_hash) {
  Dataset ds;
  ds.dt = dt;
  ds.t_obs = t_obs;
  ds.t_horizon = t_horizon;
  ds.provenance_hash = provenance_hash;
  if (!records.empty()) {
    ds.n_neighbors = static_cast<int>(records.front().observation.num_neighbors());
    ds.n_obstacles = static_cast<int>(records.front().observation.num_obstacles());
  }
  ds.records = std::move(records);
  return ds;
}

}  // namespace mrnav
