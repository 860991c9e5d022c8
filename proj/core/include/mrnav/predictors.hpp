#pragma once

#include <deque>
#include <memory>

#include "mrnav/neural/model.hpp"
#include "mrnav/observation.hpp"
#include "mrnav/types.hpp"

namespace mrnav {

enum class PredictorKind { ConstantVelocity, CommunicationOracle, LearnedRnn };

/// Predictor selection plus the weights the learned variant runs on.
struct PredictorSpec {
  PredictorKind kind = PredictorKind::ConstantVelocity;
  std::shared_ptr<const neural::ModelWeights> weights;  // LearnedRnn only

  void validate() const;  // LearnedRnn without weights is an error
};

/// Extrapolate a neighbor at constant velocity (same rule as obstacles).
PlannedTrajectory predict_cvm(const Vec3& neighbor_pos, const Vec3& neighbor_vel, int steps,
                              double dt);

/// Communication-based prediction: the neighbor's own published plan. A plan
/// from the previous tick is advanced one step with its final entry repeated.
PlannedTrajectory predict_oracle(const PlannedTrajectory& neighbor_last_plan,
                                 bool from_previous_tick);

/// Run the learned model on the query robot's observation and integrate the
/// predicted velocities from its current position. `steps` must not exceed
/// the horizon the model was trained with.
PlannedTrajectory predict_rnn(const ObservationHistory& history,
                              const neural::ModelWeights& weights, int steps, double dt,
                              bool zero_environment = false);

/// Rolling window of global state snapshots from which per-query observations
/// are assembled. Until the window fills, histories are front-padded by
/// repeating the earliest snapshot so sequence lengths stay fixed.
///
/// Re-centering is explicit: query_history(q) expresses every other robot and
/// obstacle relative to robot q, which is what the prediction model expects
/// regardless of which robot is doing the observing.
class ObservationBuffer {
 public:
  ObservationBuffer(int n_robots, int n_obstacles, int t_obs);

  void record(const std::vector<RobotState>& robots,
              const std::vector<ObstacleState>& obstacles);

  /// Observation for query robot q over the last t_obs+1 ticks. The query's
  /// neighbors are all other robots in index order (q skipped).
  ObservationHistory query_history(int query_robot) const;

  bool empty() const { return snapshots_.empty(); }
  int t_obs() const { return t_obs_; }

 private:
  struct Snapshot {
    std::vector<RobotState> robots;
    std::vector<ObstacleState> obstacles;
  };
  int n_robots_;
  int n_obstacles_;
  int t_obs_;
  std::deque<Snapshot> snapshots_;  // newest at back, size <= t_obs+1
};

}  // namespace mrnav
