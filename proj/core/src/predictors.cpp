#include "mrnav/predictors.hpp"

#include "mrnav/dynamics.hpp"
#include "mrnav/errors.hpp"

namespace mrnav {

void PredictorSpec::validate() const {
  if (kind == PredictorKind::LearnedRnn && !weights) {
    throw ModelContractError("predictor: LearnedRnn selected but no weights supplied");
  }
}

PlannedTrajectory predict_cvm(const Vec3& neighbor_pos, const Vec3& neighbor_vel, int steps,
                              double dt) {
  ObstacleState as_obstacle{neighbor_pos, neighbor_vel};
  PlannedTrajectory traj;
  traj.positions = predict_obstacle(as_obstacle, steps, dt);
  traj.velocities.assign(static_cast<std::size_t>(steps), neighbor_vel);
  return traj;
}

PlannedTrajectory predict_oracle(const PlannedTrajectory& neighbor_last_plan,
                                 bool from_previous_tick) {
  if (neighbor_last_plan.positions.empty()) {
    throw std::invalid_argument("predict_oracle: neighbor has no plan (use the CVM fallback)");
  }
  if (!from_previous_tick) return neighbor_last_plan;
  PlannedTrajectory out = neighbor_last_plan;
  if (out.positions.size() > 1) {
    out.positions.assign(neighbor_last_plan.positions.begin() + 1,
                         neighbor_last_plan.positions.end());
    out.positions.push_back(neighbor_last_plan.positions.back());
    out.velocities.assign(neighbor_last_plan.velocities.begin() + 1,
                          neighbor_last_plan.velocities.end());
    out.velocities.push_back(neighbor_last_plan.velocities.back());
  }
  return out;
}

PlannedTrajectory predict_rnn(const ObservationHistory& history,
                              const neural::ModelWeights& weights, int steps, double dt,
                              bool zero_environment) {
  if (steps < 1 || steps > weights.t_horizon) {
    throw ModelContractError("predict_rnn: steps must be in [1, model horizon]");
  }
  const Vec3Seq velocities = neural::forward(history, weights, zero_environment);
  PlannedTrajectory traj;
  traj.positions.reserve(static_cast<std::size_t>(steps));
  traj.velocities.reserve(static_cast<std::size_t>(steps));
  Vec3 p = history.ego_position;
  for (int k = 0; k < steps; ++k) {
    const Vec3& v = velocities[static_cast<std::size_t>(k)];
    p += dt * v;
    traj.positions.push_back(p);
    traj.velocities.push_back(v);
  }
  return traj;
}

ObservationBuffer::ObservationBuffer(int n_robots, int n_obstacles, int t_obs)
    : n_robots_(n_robots), n_obstacles_(n_obstacles), t_obs_(t_obs) {
  if (n_robots < 1 || n_obstacles < 0 || t_obs < 1) {
    throw std::invalid_argument("observation buffer: bad sizes");
  }
}

void ObservationBuffer::record(const std::vector<RobotState>& robots,
                               const std::vector<ObstacleState>& obstacles) {
  if (static_cast<int>(robots.size()) != n_robots_ ||
      static_cast<int>(obstacles.size()) != n_obstacles_) {
    throw std::invalid_argument("observation buffer: snapshot size mismatch");
  }
  snapshots_.push_back({robots, obstacles});
  while (static_cast<int>(snapshots_.size()) > t_obs_ + 1) snapshots_.pop_front();
}

ObservationHistory ObservationBuffer::query_history(int query_robot) const {
  if (snapshots_.empty()) {
    throw std::logic_error("observation buffer: no snapshots recorded yet");
  }
  const std::size_t q = static_cast<std::size_t>(query_robot);
  const int len = t_obs_ + 1;

  ObservationHistory h;
  h.ego_velocities.reserve(static_cast<std::size_t>(len));
  h.neighbor_rel_positions.assign(static_cast<std::size_t>(n_robots_ - 1), {});
  h.neighbor_rel_velocities.assign(static_cast<std::size_t>(n_robots_ - 1), {});
  for (auto& seq : h.neighbor_rel_positions) seq.reserve(static_cast<std::size_t>(len));
  for (auto& seq : h.neighbor_rel_velocities) seq.reserve(static_cast<std::size_t>(len));

  // Oldest first; missing leading ticks repeat the earliest snapshot.
  const int have = static_cast<int>(snapshots_.size());
  for (int t = 0; t < len; ++t) {
    const int src = std::max(0, have - len + t);
    const Snapshot& snap = snapshots_[static_cast<std::size_t>(src)];
    h.ego_velocities.push_back(snap.robots[q].velocity);
    std::size_t branch = 0;
    for (int j = 0; j < n_robots_; ++j) {
      if (j == query_robot) continue;
      const std::size_t js = static_cast<std::size_t>(j);
      h.neighbor_rel_positions[branch].push_back(snap.robots[js].position -
                                                 snap.robots[q].position);
      h.neighbor_rel_velocities[branch].push_back(snap.robots[js].velocity -
                                                  snap.robots[q].velocity);
      ++branch;
    }
  }

  const Snapshot& now = snapshots_.back();
  h.ego_position = now.robots[q].position;
  h.obstacle_rel_positions.reserve(static_cast<std::size_t>(n_obstacles_));
  h.obstacle_rel_velocities.reserve(static_cast<std::size_t>(n_obstacles_));
  for (const auto& obs : now.obstacles) {
    h.obstacle_rel_positions.push_back(obs.position - now.robots[q].position);
    h.obstacle_rel_velocities.push_back(obs.velocity - now.robots[q].velocity);
  }
  return h;
}

}  // namespace mrnav
