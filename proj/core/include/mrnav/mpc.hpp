#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mrnav/dynamics.hpp"
#include "mrnav/geometry.hpp"
#include "mrnav/types.hpp"

namespace mrnav {

struct MpcConfig {
  int horizon_steps = 20;          // N
  double dt = 0.05;                // [s]
  double robot_radius = 0.4;       // r, for the 2r inter-robot clearance [m]
  double weight_goal = 1.0;        // terminal position cost
  double weight_input = 0.05;      // control effort cost
  double weight_slack_lin = 1e3;   // linear slack penalty
  double weight_slack_quad = 1e2;  // quadratic slack penalty
  int sqp_iterations = 5;
  double trust_region = 0.5;       // per-axis position deviation bound [m]
  // Extra clearance the planner keeps beyond the collision predicates, so a
  // plan that rides the constraint boundary still survives prediction error.
  // Collision checking itself stays exact.
  double safety_margin = 0.05;     // [m]

  void validate() const;
};

/// Predicted positions of every other agent over the planning horizon,
/// one sequence of exactly N positions per neighbor robot / obstacle.
struct NeighborPrediction {
  std::vector<Vec3Seq> robot_trajectories;
  std::vector<Vec3Seq> obstacle_trajectories;
};

struct MpcSolution {
  std::vector<RobotState> states;       // length N+1, states[0] == initial
  std::vector<ControlInput> inputs;     // length N
  std::vector<double> slacks;           // length N+1, all >= 0
  double objective = 0.0;
  bool converged = false;
};

/// Per-solve bookkeeping exported to the eval harness.
struct SolveDiagnostics {
  double objective = 0.0;
  double max_slack = 0.0;
  int sqp_iterations = 0;
  int qp_iterations = 0;
  bool converged = false;
  bool failed = false;                 // solver error; inputs fell back to zero
  bool used_cvm_fallback = false;      // oracle predictor had no plan yet
  std::vector<double> merit_history;   // merit of accepted iterates, in order
  double solve_time_ms = 0.0;
};

/// Solve the receding-horizon avoidance problem for one robot against fixed
/// predictions of everyone else. Dynamics are eliminated by single shooting,
/// so returned states always re-simulate exactly; collision constraints are
/// sequentially convexified into supporting half-spaces (which under-
/// approximate the free space, so a feasible QP step never cuts a corner).
/// Slack variables keep every subproblem feasible. Throws SolverError if the
/// QP backend fails to converge.
MpcSolution solve_mpc(const RobotState& initial, const Vec3& goal,
                      const NeighborPrediction& predictions, const MpcConfig& cfg,
                      const Limits& limits, const EllipsoidMetric& metric,
                      const MpcSolution* warm_start = nullptr,
                      SolveDiagnostics* diagnostics = nullptr);

/// Supplies robot `i` its predictions of everyone else for the current tick.
using PredictionSource = std::function<NeighborPrediction(int robot_index)>;

/// Receding-horizon bookkeeping for a team of robots: holds each robot's last
/// plan to warm start the next tick and to serve as the published trajectory
/// for communication-based planning.
class FleetPlanner {
 public:
  FleetPlanner(MpcConfig cfg, Limits limits, EllipsoidMetric metric, int n_robots);

  /// Decentralized tick: every robot plans against `source` predictions only.
  /// A per-robot solver failure zeroes that robot's input and flags it in the
  /// diagnostics; other robots are unaffected.
  std::vector<ControlInput> plan_step_all(const std::vector<RobotState>& robots,
                                          const Vec3Seq& goals,
                                          const PredictionSource& source);

  /// Centralized sequential tick: robots solve in index order; robot i avoids
  /// the just-updated plans of robots j < i and the previous-tick plans of
  /// robots j > i, so every robot constrains against all others.
  std::vector<ControlInput> centralized_sequential_step(
      const std::vector<RobotState>& robots, const Vec3Seq& goals,
      const std::vector<ObstacleState>& obstacles);

  /// Plans published after the most recent tick (index = robot).
  const std::vector<PlannedTrajectory>& published_plans() const { return published_; }
  /// True while a robot has not yet produced a plan (tick 0).
  bool has_plan(int robot_index) const;

  const std::vector<SolveDiagnostics>& last_diagnostics() const { return diagnostics_; }
  const MpcConfig& config() const { return cfg_; }
  const Limits& limits() const { return limits_; }
  const EllipsoidMetric& metric() const { return metric_; }

  /// Forget all published plans and warm starts (new scenario instance).
  void reset();

 private:
  MpcSolution& solve_robot(int i, const RobotState& state, const Vec3& goal,
                           const NeighborPrediction& predictions);

  MpcConfig cfg_;
  Limits limits_;
  EllipsoidMetric metric_;
  std::vector<std::optional<MpcSolution>> last_solutions_;
  std::vector<PlannedTrajectory> published_;
  std::vector<SolveDiagnostics> diagnostics_;
};

/// Obstacle CVM predictions packaged for solve_mpc.
std::vector<Vec3Seq> predict_obstacles_cvm(const std::vector<ObstacleState>& obstacles,
                                           int horizon_steps, double dt);

}  // namespace mrnav
