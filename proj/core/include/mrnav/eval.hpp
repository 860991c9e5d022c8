#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mrnav/datagen.hpp"
#include "mrnav/sim.hpp"

namespace mrnav {

enum class ScenarioKind { SymmetricSwap, AsymmetricSwap, PairwiseSwap, RandomMoving };

std::string to_string(ScenarioKind kind);
std::string to_string(PlannerMode mode);
ScenarioKind scenario_kind_from_string(const std::string& name);
PlannerMode planner_mode_from_string(const std::string& name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::RandomMoving;
  int n_robots = 4;
  int n_obstacles = 0;
  std::uint64_t instance_seed = 1;
};

struct ScenarioInstance {
  std::vector<RobotState> starts;  // at rest
  Vec3Seq goals;
  std::vector<ObstacleState> obstacles;
};

/// Deterministic instance geometry for one scenario family draw. Starts and
/// goals are mutually clear of each other and of the obstacle spawns.
ScenarioInstance generate_instance(const Scenario& scenario, const WorldConfig& world);

struct SummaryStats {
  double min = 0.0;
  double avg = 0.0;
  double stddev = 0.0;
  double max = 0.0;
  int count = 0;
};
SummaryStats summarize(const std::vector<double>& values);

/// Aggregated planner comparison numbers for one (scenario, planner) pair.
/// Length/duration/speed pool per-robot values over instances that finished
/// collision-free within the timeout.
struct PlanningMetrics {
  int instances = 0;
  int collision_instances = 0;
  int timeout_instances = 0;
  SummaryStats trajectory_length;    // [m]
  SummaryStats trajectory_duration;  // [s]
  SummaryStats average_speed;        // [m/s], avg/stddev meaningful
  double mean_solve_time_ms = 0.0;   // per robot-tick
};

struct BenchmarkOptions {
  double timeout_seconds = 60.0;
  double goal_tolerance = 0.1;
  int t_obs = 20;
  std::shared_ptr<const neural::ModelWeights> weights;  // learned planner only
  int jobs = 1;  // instances run concurrently; aggregation is order-free
};

PlanningMetrics run_planning_benchmark(const Scenario& family, int n_instances,
                                       PlannerMode planner, const WorldConfig& world,
                                       const MpcConfig& mpc, const Limits& limits,
                                       const BenchmarkOptions& options);

enum class PredictionMethod { Cvm, Rnn, RnnNoEnvironment, Playback };
std::string to_string(PredictionMethod method);

/// Per-horizon-step position error statistics of one prediction method.
struct PredictionMetrics {
  PredictionMethod method = PredictionMethod::Cvm;
  std::vector<double> mean_error;  // [m], index = horizon step - 1
  std::vector<double> std_error;
};

/// Evaluate prediction methods on a held-out dataset: ground truth per record
/// is the executed trajectory integrated from the record origin.
std::vector<PredictionMetrics> eval_prediction(const Dataset& test_dataset,
                                               const std::vector<PredictionMethod>& methods,
                                               const neural::ModelWeights* weights);

struct BenchmarkReportRow {
  std::string scenario;
  std::string planner;
  PlanningMetrics metrics;
};

struct EvalReport {
  std::vector<BenchmarkReportRow> planning;      // Table-shaped comparison
  std::vector<PredictionMetrics> prediction;     // per-step error curves
  double dt = 0.05;
};

/// Writes planning.csv, prediction.csv and summary.json under `directory`.
void export_results(const EvalReport& report, const std::filesystem::path& directory);

/// Parse summary.json back (used to verify the export round trip).
EvalReport load_results_json(const std::filesystem::path& json_path);

}  // namespace mrnav
