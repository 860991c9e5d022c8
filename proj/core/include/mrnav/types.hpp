#pragma once

#include <Eigen/Core>
#include <vector>

namespace mrnav {

using Vec3 = Eigen::Vector3d;
using Vec3Seq = std::vector<Eigen::Vector3d>;

/// Position/velocity of one robot at one tick.
struct RobotState {
  Vec3 position{Vec3::Zero()};   // [m]
  Vec3 velocity{Vec3::Zero()};   // [m/s]
};

/// Moving obstacle, modeled as an upright non-rotating ellipsoid at `position`.
struct ObstacleState {
  Vec3 position{Vec3::Zero()};   // ellipsoid center [m]
  Vec3 velocity{Vec3::Zero()};   // [m/s]
};

/// Horizon-indexed sequence of positions/velocities, one entry per step.
struct PlannedTrajectory {
  Vec3Seq positions;
  Vec3Seq velocities;

  std::size_t size() const { return positions.size(); }
};

}  // namespace mrnav
