#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <vector>

#include "mrnav/geometry.hpp"
#include "mrnav/mpc.hpp"
#include "mrnav/predictors.hpp"

namespace mrnav {

enum class PlannerMode {
  CentralizedComm,     // sequential planning with shared plans
  DecentralizedCvm,    // constant-velocity neighbor predictions
  DecentralizedRnn,    // learned neighbor predictions
  DecentralizedOracle  // previous-tick plans over the in-process blackboard
};

struct TickRecord {
  std::vector<RobotState> robots;  // states at tick start
  std::vector<ObstacleState> obstacles;
  Vec3Seq goals;
  std::vector<SolveDiagnostics> diagnostics;
  std::vector<PlannedTrajectory> plans;  // filled only when record_plans is set
  bool robot_collision = false;
  bool obstacle_collision = false;
};

struct SimLog {
  double dt = 0.05;
  int n_robots = 0;
  int n_obstacles = 0;
  std::vector<TickRecord> ticks;

  bool any_collision() const;
};

struct SimOptions {
  PlannerMode mode = PlannerMode::CentralizedComm;
  std::shared_ptr<const neural::ModelWeights> weights;  // DecentralizedRnn only
  double goal_tolerance = 0.1;      // [m]
  double obstacle_noise_std = 0.0;  // per-axis velocity noise per tick [m/s]
  bool randomize_goals = false;     // resample a goal once reached (datagen)
  bool record_plans = false;        // keep every tick's full plans in the log
  int t_obs = 20;                   // observation window for the learned mode
};

/// Columnar text log: one row per (tick, robot/obstacle), suitable for
/// external plotting. When plans were recorded they go to `path` + ".plans".
void write_trajectory_log(const SimLog& log, const std::filesystem::path& path,
                          std::uint64_t manifest_hash);

/// Closed-loop multi-robot world: robots replan every tick under the selected
/// planner mode, obstacles drift at (noisy) constant velocity and respawn when
/// they leave the workspace. Fully deterministic for a fixed seed.
class Simulator {
 public:
  Simulator(const WorldConfig& world, const MpcConfig& mpc, const Limits& limits,
            const SimOptions& options, std::uint64_t seed);

  /// Random mutually-clear robots, goals and obstacles (demonstration style).
  void spawn_random();

  /// Fixed scenario instance (robots at rest unless stated otherwise).
  void set_scene(const std::vector<RobotState>& robots, const Vec3Seq& goals,
                 const std::vector<ObstacleState>& obstacles);

  void run(int ticks);
  void step();

  const SimLog& log() const { return log_; }
  SimLog take_log() { return std::move(log_); }
  const std::vector<RobotState>& robots() const { return robots_; }
  const Vec3Seq& goals() const { return goals_; }
  const WorldConfig& world() const { return world_; }

  /// First time each robot came within goal_tolerance of its goal ([s], -1 if
  /// never). With goal randomization this refers to the current goal.
  const std::vector<double>& first_reach_time() const { return first_reach_; }
  bool all_robots_reached() const;

  double elapsed_seconds() const { return static_cast<double>(tick_) * world_.dt; }

 private:
  Vec3 sample_goal_position(int robot_index);
  ObstacleState sample_obstacle_state();
  Vec3 uniform_in_box(const Vec3& lo, const Vec3& hi);
  Vec3 uniform_direction();
  NeighborPrediction build_prediction(int robot_index, std::vector<bool>* fallback) const;

  WorldConfig world_;
  SimOptions options_;
  EllipsoidMetric metric_;
  FleetPlanner fleet_;
  ObservationBuffer buffer_;
  std::mt19937_64 rng_;

  std::vector<RobotState> robots_;
  Vec3Seq goals_;
  std::vector<ObstacleState> obstacles_;
  std::vector<double> first_reach_;
  SimLog log_;
  long tick_ = 0;
};

}  // namespace mrnav
