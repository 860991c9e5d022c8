#include <doctest.h>

#include <random>

#include "mrnav/dynamics.hpp"

using namespace mrnav;

TEST_CASE("double integrator step") {
  RobotState s;
  s.position = {0, 0, 0};
  s.velocity = {1, 0, 0};
  RobotState next = step(s, ControlInput{Vec3::Zero()}, 0.05);
  CHECK(next.position.isApprox(Vec3{0.05, 0, 0}, 1e-15));
  CHECK(next.velocity.isApprox(Vec3{1, 0, 0}));

  s = RobotState{};
  next = step(s, ControlInput{{2, 0, 0}}, 0.05);
  CHECK(next.position(0) == doctest::Approx(0.0025).epsilon(1e-14));
  CHECK(next.velocity(0) == doctest::Approx(0.1).epsilon(1e-14));

  s.position = {1, 1, 1};
  s.velocity = Vec3::Zero();
  next = step(s, ControlInput{Vec3::Zero()}, 0.37);
  CHECK(next.position == s.position);
  CHECK(next.velocity == s.velocity);
}

TEST_CASE("half-step composition identities") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    RobotState s;
    s.position = {coord(rng), coord(rng), coord(rng)};
    s.velocity = {coord(rng), coord(rng), coord(rng)};
    const ControlInput u{{coord(rng), coord(rng), coord(rng)}};
    const double dt = 0.08;

    const RobotState full = step(s, u, dt);
    const RobotState halves = step(step(s, u, dt / 2), u, dt / 2);

    // Velocity composes exactly; position differs by the analytic cross term
    // u*dt^2/4 between one full step and two half steps.
    CHECK(halves.velocity.isApprox(full.velocity, 1e-15));
    const Vec3 correction = 0.25 * dt * dt * 0.5 * u.acceleration;
    CHECK((full.position - halves.position).isApprox(correction, 1e-9));
  }
}

TEST_CASE("constant-velocity obstacle propagation") {
  ObstacleState obs;
  obs.position = {1, 1, 1};
  obs.velocity = {0.5, 0, 0};
  const Vec3Seq traj = predict_obstacle(obs, 2, 0.05);
  REQUIRE(traj.size() == 2);
  CHECK(traj[0].isApprox(Vec3{1.025, 1, 1}, 1e-15));
  CHECK(traj[1].isApprox(Vec3{1.05, 1, 1}, 1e-15));

  obs.velocity = Vec3::Zero();
  const Vec3Seq still = predict_obstacle(obs, 5, 0.05);
  for (const auto& p : still) CHECK(p == obs.position);

  obs.velocity = {0, -1, 2};
  const Vec3Seq one = predict_obstacle(obs, 1, 0.1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].isApprox(obs.position + 0.1 * obs.velocity, 1e-15));
}

TEST_CASE("prediction prefix property") {
  ObstacleState obs;
  obs.position = {0.3, -0.4, 1.7};
  obs.velocity = {0.9, 0.2, -0.1};
  const Vec3Seq longer = predict_obstacle(obs, 17, 0.05);
  const Vec3Seq shorter = predict_obstacle(obs, 9, 0.05);
  for (std::size_t k = 0; k < shorter.size(); ++k) {
    CHECK(shorter[k] == longer[k]);
  }
}
