#include "mrnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mrnav/errors.hpp"

namespace mrnav {
namespace {

constexpr int kMaxSampleTries = 200;
constexpr double kGoalWallMargin = 0.5;       // [m] goals stay inside the walls
constexpr double kGoalSeparation = 0.2;       // [m] extra gap between goals
constexpr double kObstacleClearFactor = 1.3;  // spawn clearance in metric units

bool inside_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

}  // namespace

bool SimLog::any_collision() const {
  for (const auto& tick : ticks) {
    if (tick.robot_collision || tick.obstacle_collision) return true;
  }
  return false;
}

Simulator::Simulator(const WorldConfig& world, const MpcConfig& mpc, const Limits& limits,
                     const SimOptions& options, std::uint64_t seed)
    : world_(world),
      options_(options),
      metric_(build_ellipsoid_metric(world.obstacle_semi_axes, world.robot_radius)),
      fleet_(mpc, limits, metric_, world.n_robots),
      buffer_(world.n_robots, world.n_obstacles, options.t_obs),
      rng_(seed) {
  world_.validate();
  if (options_.mode == PlannerMode::DecentralizedRnn && !options_.weights) {
    throw ModelContractError("simulator: learned planner mode requires model weights");
  }
  robots_.resize(static_cast<std::size_t>(world_.n_robots));
  goals_.assign(static_cast<std::size_t>(world_.n_robots), Vec3::Zero());
  obstacles_.resize(static_cast<std::size_t>(world_.n_obstacles));
  first_reach_.assign(robots_.size(), -1.0);
  log_.dt = world_.dt;
  log_.n_robots = world_.n_robots;
  log_.n_obstacles = world_.n_obstacles;
}

Vec3 Simulator::uniform_in_box(const Vec3& lo, const Vec3& hi) {
  Vec3 p;
  for (int d = 0; d < 3; ++d) {
    std::uniform_real_distribution<double> dist(lo(d), hi(d));
    p(d) = dist(rng_);
  }
  return p;
}

Vec3 Simulator::uniform_direction() {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng_), gauss(rng_), gauss(rng_));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Vec3 Simulator::sample_goal_position(int robot_index) {
  const Vec3 lo = world_.extent_min.array() + kGoalWallMargin;
  const Vec3 hi = world_.extent_max.array() - kGoalWallMargin;
  const double r = world_.robot_radius;
  Vec3 candidate = goals_[static_cast<std::size_t>(robot_index)];
  for (int attempt = 0; attempt < kMaxSampleTries; ++attempt) {
    candidate = uniform_in_box(lo, hi);
    bool ok = true;
    for (std::size_t j = 0; j < robots_.size(); ++j) {
      if (static_cast<int>(j) != robot_index &&
          (candidate - robots_[j].position).norm() < 2.0 * r) {
        ok = false;
        break;
      }
      if (static_cast<int>(j) != robot_index &&
          (candidate - goals_[j]).norm() < 2.0 * r + kGoalSeparation) {
        ok = false;
        break;
      }
    }
    if (ok) {
      for (const auto& obs : obstacles_) {
        if (weighted_norm(candidate - obs.position, metric_) < 1.0) {
          ok = false;
          break;
        }
      }
    }
    if (ok) break;
  }
  return candidate;
}

ObstacleState Simulator::sample_obstacle_state() {
  const Vec3 lo = world_.extent_min + world_.obstacle_semi_axes;
  const Vec3 hi = world_.extent_max - world_.obstacle_semi_axes;
  ObstacleState obs;
  for (int attempt = 0; attempt < kMaxSampleTries; ++attempt) {
    obs.position = uniform_in_box(lo, hi);
    bool clear = true;
    for (const auto& robot : robots_) {
      if (weighted_norm(robot.position - obs.position, metric_) < kObstacleClearFactor) {
        clear = false;
        break;
      }
    }
    if (clear) break;
  }
  std::uniform_real_distribution<double> speed(0.5, 1.2);
  obs.velocity = speed(rng_) * uniform_direction();
  return obs;
}

void Simulator::spawn_random() {
  const double r = world_.robot_radius;
  const Vec3 lo = world_.extent_min.array() + kGoalWallMargin;
  const Vec3 hi = world_.extent_max.array() - kGoalWallMargin;
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    for (int attempt = 0; attempt < kMaxSampleTries; ++attempt) {
      robots_[i].position = uniform_in_box(lo, hi);
      robots_[i].velocity = Vec3::Zero();
      bool clear = true;
      for (std::size_t j = 0; j < i; ++j) {
        if ((robots_[i].position - robots_[j].position).norm() < 2.0 * r + kGoalSeparation) {
          clear = false;
          break;
        }
      }
      if (clear) break;
    }
  }
  for (auto& obs : obstacles_) obs = sample_obstacle_state();
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    goals_[i] = sample_goal_position(static_cast<int>(i));
  }
  std::fill(first_reach_.begin(), first_reach_.end(), -1.0);
  fleet_.reset();
}

void Simulator::set_scene(const std::vector<RobotState>& robots, const Vec3Seq& goals,
                          const std::vector<ObstacleState>& obstacles) {
  if (robots.size() != robots_.size() || goals.size() != goals_.size() ||
      obstacles.size() != obstacles_.size()) {
    throw std::invalid_argument("simulator: scene sizes disagree with world config");
  }
  robots_ = robots;
  goals_ = goals;
  obstacles_ = obstacles;
  std::fill(first_reach_.begin(), first_reach_.end(), -1.0);
  fleet_.reset();
}

NeighborPrediction Simulator::build_prediction(int robot_index, std::vector<bool>* fallback) const {
  const int n = fleet_.config().horizon_steps;
  NeighborPrediction pred;
  pred.obstacle_trajectories = predict_obstacles_cvm(obstacles_, n, world_.dt);
  pred.robot_trajectories.reserve(robots_.size() - 1);
  for (std::size_t j = 0; j < robots_.size(); ++j) {
    if (static_cast<int>(j) == robot_index) continue;
    switch (options_.mode) {
      case PlannerMode::DecentralizedCvm:
        pred.robot_trajectories.push_back(
            predict_cvm(robots_[j].position, robots_[j].velocity, n, world_.dt).positions);
        break;
      case PlannerMode::DecentralizedRnn: {
        const ObservationHistory history = buffer_.query_history(static_cast<int>(j));
        pred.robot_trajectories.push_back(
            predict_rnn(history, *options_.weights, n, world_.dt).positions);
        break;
      }
      case PlannerMode::DecentralizedOracle: {
        const auto& plan = fleet_.published_plans()[j];
        if (plan.positions.empty()) {
          if (fallback) (*fallback)[static_cast<std::size_t>(robot_index)] = true;
          pred.robot_trajectories.push_back(
              predict_cvm(robots_[j].position, robots_[j].velocity, n, world_.dt).positions);
        } else {
          pred.robot_trajectories.push_back(predict_oracle(plan, true).positions);
        }
        break;
      }
      case PlannerMode::CentralizedComm:
        throw std::logic_error("simulator: centralized mode has no prediction source");
    }
  }
  return pred;
}

void Simulator::step() {
  // Reached goals are refreshed before planning (demonstration mode).
  if (options_.randomize_goals) {
    for (std::size_t i = 0; i < robots_.size(); ++i) {
      if ((robots_[i].position - goals_[i]).norm() <= options_.goal_tolerance) {
        goals_[i] = sample_goal_position(static_cast<int>(i));
        first_reach_[i] = -1.0;
      }
    }
  }

  buffer_.record(robots_, obstacles_);

  TickRecord record;
  record.robots = robots_;
  record.obstacles = obstacles_;
  record.goals = goals_;
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    for (std::size_t j = i + 1; j < robots_.size(); ++j) {
      if (!robots_collision_free(robots_[i].position, robots_[j].position,
                                 world_.robot_radius)) {
        record.robot_collision = true;
      }
    }
    for (const auto& obs : obstacles_) {
      if (!robot_obstacle_collision_free(robots_[i].position, obs.position, metric_)) {
        record.obstacle_collision = true;
      }
    }
  }

  std::vector<ControlInput> inputs;
  std::vector<bool> oracle_fallback(robots_.size(), false);
  if (options_.mode == PlannerMode::CentralizedComm) {
    inputs = fleet_.centralized_sequential_step(robots_, goals_, obstacles_);
  } else {
    inputs = fleet_.plan_step_all(robots_, goals_, [&](int i) {
      return build_prediction(i, &oracle_fallback);
    });
  }
  record.diagnostics = fleet_.last_diagnostics();
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    record.diagnostics[i].used_cvm_fallback = oracle_fallback[i];
  }
  if (options_.record_plans) record.plans = fleet_.published_plans();
  log_.ticks.push_back(std::move(record));

  for (std::size_t i = 0; i < robots_.size(); ++i) {
    robots_[i] = mrnav::step(robots_[i], inputs[i], world_.dt);
  }

  std::normal_distribution<double> noise(0.0, options_.obstacle_noise_std);
  for (auto& obs : obstacles_) {
    if (options_.obstacle_noise_std > 0.0) {
      obs.velocity += Vec3(noise(rng_), noise(rng_), noise(rng_));
    }
    obs.position += world_.dt * obs.velocity;
    if (!inside_box(obs.position, world_.extent_min, world_.extent_max)) {
      obs = sample_obstacle_state();
    }
  }

  ++tick_;
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    if (first_reach_[i] < 0.0 &&
        (robots_[i].position - goals_[i]).norm() <= options_.goal_tolerance) {
      first_reach_[i] = static_cast<double>(tick_) * world_.dt;
    }
  }
}

void Simulator::run(int ticks) {
  for (int t = 0; t < ticks; ++t) step();
}

bool Simulator::all_robots_reached() const {
  return std::all_of(first_reach_.begin(), first_reach_.end(),
                     [](double t) { return t >= 0.0; });
}

void write_trajectory_log(const SimLog& log, const std::filesystem::path& path,
                          std::uint64_t manifest_hash) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot open log file for writing: " + path.string());
  char buf[512];
  std::snprintf(buf, sizeof(buf), "# mrnav trajectory log v1\n# manifest_hash=%016llx\n",
                static_cast<unsigned long long>(manifest_hash));
  os << buf;
  std::snprintf(buf, sizeof(buf), "# dt=%.17g n_robots=%d n_obstacles=%d n_ticks=%zu\n",
                log.dt, log.n_robots, log.n_obstacles, log.ticks.size());
  os << buf;
  os << "tick,time,kind,id,px,py,pz,vx,vy,vz,gx,gy,gz,objective,max_slack,sqp_iters,"
        "converged,failed,collision\n";
  for (std::size_t t = 0; t < log.ticks.size(); ++t) {
    const TickRecord& tick = log.ticks[t];
    const double time = static_cast<double>(t) * log.dt;
    for (int i = 0; i < log.n_robots; ++i) {
      const auto& robot = tick.robots[static_cast<std::size_t>(i)];
      const auto& goal = tick.goals[static_cast<std::size_t>(i)];
      const auto& diag = tick.diagnostics[static_cast<std::size_t>(i)];
      std::snprintf(buf, sizeof(buf),
                    "%zu,%.17g,robot,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                    "%.17g,%.17g,%.17g,%d,%d,%d,%d\n",
                    t, time, i, robot.position(0), robot.position(1), robot.position(2),
                    robot.velocity(0), robot.velocity(1), robot.velocity(2), goal(0), goal(1),
                    goal(2), diag.objective, diag.max_slack, diag.sqp_iterations,
                    diag.converged ? 1 : 0, diag.failed ? 1 : 0,
                    (tick.robot_collision || tick.obstacle_collision) ? 1 : 0);
      os << buf;
    }
    for (int o = 0; o < log.n_obstacles; ++o) {
      const auto& obs = tick.obstacles[static_cast<std::size_t>(o)];
      std::snprintf(buf, sizeof(buf),
                    "%zu,%.17g,obstacle,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,0,0,0,0,0,0,0,"
                    "0,%d\n",
                    t, time, o, obs.position(0), obs.position(1), obs.position(2),
                    obs.velocity(0), obs.velocity(1), obs.velocity(2),
                    (tick.robot_collision || tick.obstacle_collision) ? 1 : 0);
      os << buf;
    }
  }
  if (!os) throw ConfigError("write failed: " + path.string());

  // Optional second file with the full per-tick plans.
  if (!log.ticks.empty() && !log.ticks.front().plans.empty()) {
    std::filesystem::path plan_path = path;
    plan_path += ".plans";
    std::ofstream ps(plan_path, std::ios::trunc);
    if (!ps) throw ConfigError("cannot open plan log for writing: " + plan_path.string());
    ps << "# mrnav plan log v1\n";
    ps << "tick,robot,step,px,py,pz,vx,vy,vz\n";
    for (std::size_t t = 0; t < log.ticks.size(); ++t) {
      const auto& plans = log.ticks[t].plans;
      for (std::size_t i = 0; i < plans.size(); ++i) {
        for (std::size_t k = 0; k < plans[i].positions.size(); ++k) {
          std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                        t, i, k + 1, plans[i].positions[k](0), plans[i].positions[k](1),
                        plans[i].positions[k](2), plans[i].velocities[k](0),
                        plans[i].velocities[k](1), plans[i].velocities[k](2));
          ps << buf;
        }
      }
    }
  }
}

}  // namespace mrnav
