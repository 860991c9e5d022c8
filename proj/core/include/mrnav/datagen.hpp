#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mrnav/neural/model.hpp"
#include "mrnav/sim.hpp"

namespace mrnav {

struct SimRunConfig {
  WorldConfig world;
  MpcConfig mpc;
  Limits limits;
  int n_sim_steps = 20000;           // N_sim
  double goal_tolerance = 0.1;       // [m]
  double obstacle_noise_std = 0.02;  // per-axis obstacle velocity noise [m/s]
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// One supervised example: the observation at (robot, tick) and the robot's
/// realized per-step average velocities over the following horizon, i.e.
/// (p^{k} - p^{k-1})/dt, so that integrating them from the observation origin
/// reproduces the logged executed positions exactly.
struct DatasetRecord {
  ObservationHistory observation;
  Vec3Seq future_velocities;
  std::int32_t robot_id = 0;
  std::int64_t tick = 0;
};

/// Run the centralized sequential planner in a randomized world: goals are
/// resampled (collision-free) once reached, obstacles drift with small
/// velocity noise and respawn on leaving the workspace. Returns the raw
/// closed-loop log of everything, one record per tick.
SimLog run_demonstration(const SimRunConfig& cfg);

struct DemonstrationResult {
  SimLog log;
  int attempts = 1;
  std::vector<std::uint64_t> rejected_seeds;  // seeds whose runs had collisions
  bool collision_free = false;
};

/// Demonstrations feed imitation training, so a run containing any collision
/// is rejected and retried under a derived seed.
DemonstrationResult run_demonstration_collision_free(const SimRunConfig& cfg,
                                                     int max_attempts = 5);

/// Window the log into supervised records: one per (robot, tick) with a full
/// observation window behind it and a full horizon ahead of it. Short logs
/// yield no records. Records are ordered by tick, then robot.
std::vector<DatasetRecord> extract_dataset(const SimLog& log, int t_obs, int t_horizon);

std::vector<neural::TrainingSample> to_training_samples(
    const std::vector<DatasetRecord>& records);

/// Dataset container mirrored by the on-disk format. All records share the
/// same neighbor/obstacle counts and window sizes.
struct Dataset {
  int n_neighbors = 0;
  int n_obstacles = 0;
  int t_obs = 20;
  int t_horizon = 20;
  double dt = 0.05;
  std::uint64_t provenance_hash = 0;
  std::vector<DatasetRecord> records;
};

Dataset make_dataset(std::vector<DatasetRecord> records, double dt, int t_obs, int t_horizon,
                     std::uint64_t provenance_hash);

/// Versioned binary record stream; round trips are bit-exact.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace mrnav
