#include "mrnav/dynamics.hpp"

namespace mrnav {

RobotState step(const RobotState& state, const ControlInput& input, double dt) {
  RobotState next;
  next.position = state.position + dt * state.velocity + (0.5 * dt * dt) * input.acceleration;
  next.velocity = state.velocity + dt * input.acceleration;
  return next;
}

Vec3Seq predict_obstacle(const ObstacleState& obs, int horizon_steps, double dt) {
  Vec3Seq positions(static_cast<std::size_t>(horizon_steps));
  for (int k = 1; k <= horizon_steps; ++k) {
    positions[static_cast<std::size_t>(k - 1)] = obs.position + (k * dt) * obs.velocity;
  }
  return positions;
}

}  // namespace mrnav
