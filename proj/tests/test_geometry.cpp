#include <doctest.h>

#include <random>

#include "mrnav/errors.hpp"
#include "mrnav/geometry.hpp"

using namespace mrnav;

TEST_CASE("ellipsoid metric from semi-axes and radius") {
  // Values from the obstacle geometry used throughout the configs.
  const EllipsoidMetric m = build_ellipsoid_metric({0.4, 0.4, 0.9}, 0.4);
  CHECK(m.omega_diag(0) == doctest::Approx(1.5625).epsilon(1e-12));
  CHECK(m.omega_diag(1) == doctest::Approx(1.5625).epsilon(1e-12));
  CHECK(m.omega_diag(2) == doctest::Approx(1.0 / 1.69).epsilon(1e-12));

  const EllipsoidMetric identity = build_ellipsoid_metric({1, 1, 1}, 0.0);
  CHECK(identity.omega_diag.isApprox(Vec3::Ones()));

  const EllipsoidMetric unit = build_ellipsoid_metric({0.6, 0.6, 0.6}, 0.4);
  CHECK(unit.omega_diag.isApprox(Vec3::Ones(), 1e-12));

  CHECK_THROWS_AS(build_ellipsoid_metric({0.0, 1, 1}, 0.4), InvalidGeometryError);
  CHECK_THROWS_AS(build_ellipsoid_metric({-1, 1, 1}, 0.4), InvalidGeometryError);
}

TEST_CASE("robot pair clearance uses 2r with boundary free") {
  CHECK(robots_collision_free({0, 0, 0}, {0.8, 0, 0}, 0.4));
  CHECK_FALSE(robots_collision_free({0, 0, 0}, {0.79, 0, 0}, 0.4));
  CHECK_FALSE(robots_collision_free({1, 2, 3}, {1, 2, 3}, 0.4));
}

TEST_CASE("robot-obstacle test is a unit ball in scaled coordinates") {
  const EllipsoidMetric identity = build_ellipsoid_metric({1, 1, 1}, 0.0);
  CHECK_FALSE(robot_obstacle_collision_free({1, 1, 1}, {1, 1, 1}, identity));
  CHECK(robot_obstacle_collision_free({1, 0, 0}, {0, 0, 0}, identity));

  const EllipsoidMetric m = build_ellipsoid_metric({0.4, 0.4, 0.9}, 0.4);
  CHECK(weighted_norm({0.8, 0, 0}, m) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(robot_obstacle_collision_free({0.8, 0, 0}, {0, 0, 0}, m));
}

TEST_CASE("boundary contact along each axis lands exactly on the unit sphere") {
  const Vec3 semi{0.3, 0.7, 1.1};
  const double r = 0.25;
  const EllipsoidMetric m = build_ellipsoid_metric(semi, r);
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 d = Vec3::Zero();
    d(axis) = semi(axis) + r;
    CHECK(weighted_norm(d, m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(robot_obstacle_collision_free(d, Vec3::Zero(), m));
  }
}

TEST_CASE("predicate symmetries") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 a{coord(rng), coord(rng), coord(rng)};
    const Vec3 b{coord(rng), coord(rng), coord(rng)};
    CHECK(robots_collision_free(a, b, 0.4) == robots_collision_free(b, a, 0.4));

    const EllipsoidMetric m = build_ellipsoid_metric({0.4, 0.4, 0.9}, 0.4);
    const Vec3 d = a - b;
    CHECK(weighted_norm(d, m) == weighted_norm(-d, m));
  }
}

TEST_CASE("world config validation") {
  WorldConfig world;
  CHECK_NOTHROW(world.validate());
  world.extent_min = {3, -3, 0};
  CHECK_THROWS_AS(world.validate(), InvalidGeometryError);
  world = WorldConfig{};
  world.dt = 0.0;
  CHECK_THROWS_AS(world.validate(), InvalidGeometryError);
  world = WorldConfig{};
  world.robot_radius = -0.4;
  CHECK_THROWS_AS(world.validate(), InvalidGeometryError);
}
