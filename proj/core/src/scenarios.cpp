#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mrnav/errors.hpp"
#include "mrnav/eval.hpp"

namespace mrnav {
namespace {

constexpr double kWallMargin = 0.5;
constexpr double kStartSeparationPad = 0.15;  // beyond the 2r contact distance
constexpr int kMaxInstanceTries = 200;

Vec3 box_center(const WorldConfig& world) { return 0.5 * (world.extent_min + world.extent_max); }

double swap_circle_radius(const WorldConfig& world) {
  const Vec3 half = 0.5 * (world.extent_max - world.extent_min);
  return 0.72 * std::min(half(0), half(1));
}

bool mutually_clear(const Vec3Seq& points, double min_dist) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if ((points[i] - points[j]).norm() < min_dist) return false;
    }
  }
  return true;
}

Vec3 uniform_in(std::mt19937_64& rng, const Vec3& lo, const Vec3& hi) {
  Vec3 p;
  for (int d = 0; d < 3; ++d) {
    std::uniform_real_distribution<double> dist(lo(d), hi(d));
    p(d) = dist(rng);
  }
  return p;
}

Vec3Seq sample_clear_points(std::mt19937_64& rng, const WorldConfig& world, int count,
                            double min_dist) {
  const Vec3 lo = world.extent_min.array() + kWallMargin;
  const Vec3 hi = world.extent_max.array() - kWallMargin;
  Vec3Seq points;
  for (int tries = 0; tries < kMaxInstanceTries; ++tries) {
    points.clear();
    bool ok = true;
    for (int i = 0; i < count && ok; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxInstanceTries; ++attempt) {
        const Vec3 candidate = uniform_in(rng, lo, hi);
        bool clear = true;
        for (const auto& p : points) {
          if ((candidate - p).norm() < min_dist) {
            clear = false;
            break;
          }
        }
        if (clear) {
          points.push_back(candidate);
          placed = true;
          break;
        }
      }
      ok = placed;
    }
    if (ok) return points;
  }
  throw ConfigError("scenario: could not place mutually clear points; world too crowded");
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SymmetricSwap: return "symmetric_swap";
    case ScenarioKind::AsymmetricSwap: return "asymmetric_swap";
    case ScenarioKind::PairwiseSwap: return "pairwise_swap";
    case ScenarioKind::RandomMoving: return "random_moving";
  }
  return "unknown";
}

std::string to_string(PlannerMode mode) {
  switch (mode) {
    case PlannerMode::CentralizedComm: return "centralized";
    case PlannerMode::DecentralizedCvm: return "cvm";
    case PlannerMode::DecentralizedRnn: return "rnn";
    case PlannerMode::DecentralizedOracle: return "oracle";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "symmetric_swap" || name == "symmetric") return ScenarioKind::SymmetricSwap;
  if (name == "asymmetric_swap" || name == "asymmetric") return ScenarioKind::AsymmetricSwap;
  if (name == "pairwise_swap" || name == "pairwise") return ScenarioKind::PairwiseSwap;
  if (name == "random_moving" || name == "random") return ScenarioKind::RandomMoving;
  throw ConfigError("unknown scenario '" + name +
                    "' (expected symmetric|asymmetric|pairwise|random)");
}

PlannerMode planner_mode_from_string(const std::string& name) {
  if (name == "centralized") return PlannerMode::CentralizedComm;
  if (name == "cvm") return PlannerMode::DecentralizedCvm;
  if (name == "rnn") return PlannerMode::DecentralizedRnn;
  if (name == "oracle") return PlannerMode::DecentralizedOracle;
  throw ConfigError("unknown planner '" + name + "' (expected centralized|cvm|rnn|oracle)");
}

ScenarioInstance generate_instance(const Scenario& scenario, const WorldConfig& world) {
  world.validate();
  if (scenario.n_robots < 1) throw ConfigError("scenario: n_robots must be >= 1");
  std::mt19937_64 rng(scenario.instance_seed);
  const int n = scenario.n_robots;
  const double r = world.robot_radius;
  const double min_sep = 2.0 * r + kStartSeparationPad;
  const Vec3 center = box_center(world);
  const double radius = swap_circle_radius(world);
  const double two_pi = 2.0 * std::numbers::pi;

  ScenarioInstance inst;
  Vec3Seq starts, goals;

  switch (scenario.kind) {
    case ScenarioKind::SymmetricSwap: {
      std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
      const double phase = phase_dist(rng);
      for (int k = 0; k < n; ++k) {
        const double angle = phase + two_pi * k / n;
        starts.push_back(center + Vec3(radius * std::cos(angle), radius * std::sin(angle), 0.0));
        goals.push_back(center +
                        Vec3(radius * std::cos(angle + std::numbers::pi),
                             radius * std::sin(angle + std::numbers::pi), 0.0));
      }
      break;
    }
    case ScenarioKind::AsymmetricSwap: {
      std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
      std::uniform_real_distribution<double> radius_dist(0.55, 1.0);
      std::uniform_real_distribution<double> jitter_dist(-0.35, 0.35);
      const double half_z = 0.5 * (world.extent_max(2) - world.extent_min(2));
      const double z_span = std::max(0.0, std::min(0.5, half_z - kWallMargin));
      std::uniform_real_distribution<double> z_dist(-z_span, z_span);
      for (int tries = 0; tries < kMaxInstanceTries; ++tries) {
        starts.clear();
        goals.clear();
        const double phase = phase_dist(rng);
        for (int k = 0; k < n; ++k) {
          const double angle = phase + two_pi * k / n + jitter_dist(rng);
          const double rho = radius * radius_dist(rng);
          starts.push_back(center +
                           Vec3(rho * std::cos(angle), rho * std::sin(angle), z_dist(rng)));
          const double goal_angle = angle + std::numbers::pi + jitter_dist(rng);
          const double goal_rho = radius * radius_dist(rng);
          goals.push_back(center + Vec3(goal_rho * std::cos(goal_angle),
                                        goal_rho * std::sin(goal_angle), z_dist(rng)));
        }
        if (mutually_clear(starts, min_sep) && mutually_clear(goals, min_sep)) break;
      }
      if (!mutually_clear(starts, min_sep) || !mutually_clear(goals, min_sep)) {
        throw ConfigError("scenario: asymmetric swap placement failed; lower n_robots");
      }
      break;
    }
    case ScenarioKind::PairwiseSwap: {
      starts = sample_clear_points(rng, world, n, min_sep + 0.15);
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      goals.assign(static_cast<std::size_t>(n), Vec3::Zero());
      for (int i = 0; i + 1 < n; i += 2) {
        const std::size_t a = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
        const std::size_t b = static_cast<std::size_t>(order[static_cast<std::size_t>(i + 1)]);
        goals[a] = starts[b];
        goals[b] = starts[a];
      }
      if (n % 2 == 1) {
        const std::size_t odd = static_cast<std::size_t>(order.back());
        Vec3Seq occupied = goals;
        occupied.push_back(starts[odd]);
        const Vec3 lo = world.extent_min.array() + kWallMargin;
        const Vec3 hi = world.extent_max.array() - kWallMargin;
        goals[odd] = uniform_in(rng, lo, hi);
        for (int attempt = 0; attempt < kMaxInstanceTries; ++attempt) {
          bool clear = true;
          for (const auto& p : occupied) {
            if ((goals[odd] - p).norm() < min_sep) {
              clear = false;
              break;
            }
          }
          if (clear) break;
          goals[odd] = uniform_in(rng, lo, hi);
        }
      }
      break;
    }
    case ScenarioKind::RandomMoving: {
      starts = sample_clear_points(rng, world, n, min_sep + 0.15);
      goals = sample_clear_points(rng, world, n, min_sep);
      break;
    }
  }

  inst.starts.resize(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    inst.starts[i].position = starts[i];
    inst.starts[i].velocity = Vec3::Zero();
  }
  inst.goals = goals;

  // Obstacles spawn clear of every start and goal so instances stay solvable.
  const EllipsoidMetric metric = build_ellipsoid_metric(world.obstacle_semi_axes, r);
  const Vec3 lo = world.extent_min + world.obstacle_semi_axes;
  const Vec3 hi = world.extent_max - world.obstacle_semi_axes;
  std::uniform_real_distribution<double> speed_dist(0.5, 1.2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int o = 0; o < scenario.n_obstacles; ++o) {
    ObstacleState obs;
    for (int attempt = 0; attempt < kMaxInstanceTries; ++attempt) {
      obs.position = uniform_in(rng, lo, hi);
      bool clear = true;
      for (const auto& p : starts) {
        if (weighted_norm(p - obs.position, metric) < 1.3) clear = false;
      }
      for (const auto& p : goals) {
        if (weighted_norm(p - obs.position, metric) < 1.3) clear = false;
      }
      if (clear) break;
    }
    Vec3 dir;
    do {
      dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (dir.norm() < 1e-9);
    obs.velocity = speed_dist(rng) * dir.normalized();
    inst.obstacles.push_back(obs);
  }
  return inst;
}

}  // namespace mrnav
