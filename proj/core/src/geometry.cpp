#include "mrnav/geometry.hpp"

#include <cmath>

#include "mrnav/errors.hpp"

namespace mrnav {

void WorldConfig::validate() const {
  if (!(extent_min.array() < extent_max.array()).all()) {
    throw InvalidGeometryError("world extent_min must be componentwise below extent_max");
  }
  if (!(robot_radius > 0.0)) {
    throw InvalidGeometryError("robot_radius must be positive");
  }
  if (!(obstacle_semi_axes.array() > 0.0).all()) {
    throw InvalidGeometryError("obstacle semi-axes must be positive");
  }
  if (!(dt > 0.0)) {
    throw InvalidGeometryError("dt must be positive");
  }
  if (n_robots < 1 || n_obstacles < 0) {
    throw InvalidGeometryError("need n_robots >= 1 and n_obstacles >= 0");
  }
}

EllipsoidMetric build_ellipsoid_metric(const Vec3& semi_axes, double robot_radius) {
  if (!(semi_axes.array() > 0.0).all() || !(robot_radius >= 0.0)) {
    throw InvalidGeometryError("ellipsoid semi-axes must be positive and radius non-negative");
  }
  EllipsoidMetric metric;
  const Vec3 enlarged = semi_axes.array() + robot_radius;
  metric.omega_diag = enlarged.array().square().inverse();
  return metric;
}

double weighted_norm(const Vec3& d, const EllipsoidMetric& metric) {
  return std::sqrt((metric.omega_diag.array() * d.array().square()).sum());
}

bool robots_collision_free(const Vec3& p_i, const Vec3& p_j, double r) {
  return (p_i - p_j).norm() >= 2.0 * r;
}

bool robot_obstacle_collision_free(const Vec3& p_i, const Vec3& p_o,
                                   const EllipsoidMetric& metric) {
  return weighted_norm(p_i - p_o, metric) >= 1.0;
}

}  // namespace mrnav
