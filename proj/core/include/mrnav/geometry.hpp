#pragma once

#include <cstdint>

#include "mrnav/types.hpp"

namespace mrnav {

/// Workspace and team geometry. All units SI.
struct WorldConfig {
  Vec3 extent_min{-3.0, -3.0, 0.0};           // workspace lower corner [m]
  Vec3 extent_max{3.0, 3.0, 3.0};             // workspace upper corner [m]
  double robot_radius = 0.4;                  // enclosing sphere radius r [m]
  Vec3 obstacle_semi_axes{0.4, 0.4, 0.9};     // ellipsoid semi-axes (a,b,c) [m]
  int n_robots = 4;
  int n_obstacles = 2;
  double dt = 0.05;                           // sampling time [s]
  std::uint64_t rng_seed = 1;

  void validate() const;  // throws InvalidGeometryError
};

/// Diagonal metric for the robot-obstacle clearance test: collision-free iff
/// ||p_robot - p_obstacle||_Omega >= 1 with Omega = diag(1/(a+r)^2, ...).
struct EllipsoidMetric {
  Vec3 omega_diag{Vec3::Ones()};  // [1/m^2]
};

EllipsoidMetric build_ellipsoid_metric(const Vec3& semi_axes, double robot_radius);

/// sqrt(d^T Omega d)
double weighted_norm(const Vec3& d, const EllipsoidMetric& metric);

/// Two spheres of radius r are collision-free iff center distance >= 2r.
/// Exact equality counts as collision-free.
bool robots_collision_free(const Vec3& p_i, const Vec3& p_j, double r);

/// Robot center outside (or on) the obstacle ellipsoid enlarged by r.
bool robot_obstacle_collision_free(const Vec3& p_i, const Vec3& p_o,
                                   const EllipsoidMetric& metric);

}  // namespace mrnav
