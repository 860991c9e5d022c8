#pragma once

#include "mrnav/types.hpp"

namespace mrnav {

struct ControlInput {
  Vec3 acceleration{Vec3::Zero()};  // [m/s^2]
};

/// Componentwise box bounds on velocity and acceleration.
struct Limits {
  double v_max = 2.0;  // [m/s]
  double u_max = 4.0;  // [m/s^2]
};

/// One tick of the double-integrator model:
///   p' = p + v*dt + 0.5*u*dt^2,  v' = v + u*dt
RobotState step(const RobotState& state, const ControlInput& input, double dt);

/// Constant-velocity propagation, positions at steps 1..horizon_steps.
Vec3Seq predict_obstacle(const ObstacleState& obs, int horizon_steps, double dt);

}  // namespace mrnav
