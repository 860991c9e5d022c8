#include "mrnav/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "mrnav/errors.hpp"
#include "mrnav/qp.hpp"

namespace mrnav {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kViolationTol = 1e-6;   // pruned-constraint safeguard threshold
constexpr double kStepTol = 1e-7;        // SQP fixed-point detection [m]
constexpr double kPrunePad = 0.1;        // clearance margin beyond the trust region [m]

// Position of step k is affine in the inputs:
//   p^k = p0 + k*dt*v0 + sum_{j<k} dt^2*(k - j - 1/2) * u_j
double position_coef(int k, int j, double dt) {
  return j < k ? dt * dt * (static_cast<double>(k) - static_cast<double>(j) - 0.5) : 0.0;
}

struct Candidate {
  std::vector<ControlInput> inputs;
  std::vector<RobotState> states;        // length N+1
  std::vector<double> step_violation;    // exact predicate deficit per step
  std::vector<double> margined_violation;  // deficit against the margined constraints
  double merit = 0.0;                    // cost with margined violations as slacks
};

std::vector<RobotState> rollout(const RobotState& initial,
                                const std::vector<ControlInput>& inputs, double dt) {
  std::vector<RobotState> states(inputs.size() + 1);
  states[0] = initial;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    states[k + 1] = step(states[k], inputs[k], dt);
  }
  return states;
}

// Worst constraint deficit of position p against all predicted entities at
// horizon step k (0 when everything clears).
double violation_at(const Vec3& p, int k, const NeighborPrediction& pred, double radius,
                    const EllipsoidMetric& metric) {
  double v = 0.0;
  const std::size_t idx = static_cast<std::size_t>(k - 1);
  for (const auto& traj : pred.robot_trajectories) {
    v = std::max(v, 2.0 * radius - (p - traj[idx]).norm());
  }
  for (const auto& traj : pred.obstacle_trajectories) {
    v = std::max(v, 1.0 - weighted_norm(p - traj[idx], metric));
  }
  return v;
}

// Shrink the unit-ball test outward by `margin` meters along each semi-axis.
EllipsoidMetric inflate_metric(const EllipsoidMetric& metric, double margin) {
  EllipsoidMetric out;
  out.omega_diag = (metric.omega_diag.array().rsqrt() + margin).square().inverse();
  return out;
}

Candidate evaluate(const RobotState& initial, const Vec3& goal,
                   const std::vector<ControlInput>& inputs, const NeighborPrediction& pred,
                   const MpcConfig& cfg, const EllipsoidMetric& metric,
                   const EllipsoidMetric& margined_metric) {
  Candidate c;
  c.inputs = inputs;
  c.states = rollout(initial, inputs, cfg.dt);
  const int n = cfg.horizon_steps;
  c.step_violation.assign(static_cast<std::size_t>(n) + 1, 0.0);
  c.margined_violation.assign(static_cast<std::size_t>(n) + 1, 0.0);
  double cost = 0.0;
  for (int k = 1; k <= n; ++k) {
    const Vec3& p = c.states[static_cast<std::size_t>(k)].position;
    c.step_violation[static_cast<std::size_t>(k)] =
        violation_at(p, k, pred, cfg.robot_radius, metric);
    const double s =
        violation_at(p, k, pred, cfg.robot_radius + 0.5 * cfg.safety_margin, margined_metric);
    c.margined_violation[static_cast<std::size_t>(k)] = s;
    cost += cfg.weight_slack_lin * s + cfg.weight_slack_quad * s * s;
  }
  for (const auto& u : inputs) {
    cost += cfg.weight_input * u.acceleration.squaredNorm();
  }
  const Vec3 terminal_err = c.states.back().position - goal;
  c.merit = cost + cfg.weight_goal * terminal_err.squaredNorm();
  return c;
}

// Goal-directed rollout used when no warm start exists: accelerate along the
// straight line to the goal with a braking profile that respects the limits.
std::vector<ControlInput> initial_guess(const RobotState& initial, const Vec3& goal,
                                        const MpcConfig& cfg, const Limits& limits) {
  std::vector<ControlInput> inputs(static_cast<std::size_t>(cfg.horizon_steps));
  RobotState s = initial;
  for (auto& u : inputs) {
    const Vec3 to_goal = goal - s.position;
    const double dist = to_goal.norm();
    Vec3 v_des = Vec3::Zero();
    if (dist > 1e-9) {
      const double speed = std::min(limits.v_max, std::sqrt(2.0 * limits.u_max * dist));
      v_des = (speed / dist) * to_goal;
    }
    u.acceleration =
        ((v_des - s.velocity) / cfg.dt).cwiseMax(-limits.u_max).cwiseMin(limits.u_max);
    s = step(s, u, cfg.dt);
  }
  return inputs;
}

struct RowBuilder {
  explicit RowBuilder(Eigen::Index nv) : nv(nv) {}
  Eigen::RowVectorXd& fresh() {
    rows.emplace_back(Eigen::RowVectorXd::Zero(nv));
    return rows.back();
  }
  void bound(double lo, double hi) {
    lower.push_back(lo);
    upper.push_back(hi);
  }
  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), nv);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) = rows[i];
    }
    return a;
  }
  Eigen::VectorXd lower_vec() const {
    return Eigen::Map<const Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size()));
  }
  Eigen::VectorXd upper_vec() const {
    return Eigen::Map<const Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()));
  }
  Eigen::Index nv;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> lower, upper;
};

PlannedTrajectory to_trajectory(const MpcSolution& sol) {
  PlannedTrajectory traj;
  traj.positions.reserve(sol.states.size() - 1);
  traj.velocities.reserve(sol.states.size() - 1);
  for (std::size_t k = 1; k < sol.states.size(); ++k) {
    traj.positions.push_back(sol.states[k].position);
    traj.velocities.push_back(sol.states[k].velocity);
  }
  return traj;
}

PlannedTrajectory shift_plan(const PlannedTrajectory& plan) {
  PlannedTrajectory out = plan;
  if (plan.positions.size() > 1) {
    out.positions.assign(plan.positions.begin() + 1, plan.positions.end());
    out.positions.push_back(plan.positions.back());
    out.velocities.assign(plan.velocities.begin() + 1, plan.velocities.end());
    out.velocities.push_back(plan.velocities.back());
  }
  return out;
}

PlannedTrajectory hover_plan(const RobotState& state, int n) {
  PlannedTrajectory out;
  out.positions.assign(static_cast<std::size_t>(n), state.position);
  out.velocities.assign(static_cast<std::size_t>(n), Vec3::Zero());
  return out;
}

}  // namespace

void MpcConfig::validate() const {
  if (horizon_steps < 1) throw std::invalid_argument("mpc: horizon_steps must be >= 1");
  if (dt <= 0.0) throw std::invalid_argument("mpc: dt must be positive");
  if (robot_radius <= 0.0) throw std::invalid_argument("mpc: robot_radius must be > 0");
  if (weight_goal < 0.0 || weight_input < 0.0 || weight_slack_quad < 0.0) {
    throw std::invalid_argument("mpc: cost weights must be non-negative");
  }
  if (weight_slack_lin <= 0.0) throw std::invalid_argument("mpc: weight_slack_lin must be > 0");
  if (sqp_iterations < 1) throw std::invalid_argument("mpc: sqp_iterations must be >= 1");
  if (trust_region <= 0.0) throw std::invalid_argument("mpc: trust_region must be > 0");
  if (safety_margin < 0.0) throw std::invalid_argument("mpc: safety_margin must be >= 0");
}

MpcSolution solve_mpc(const RobotState& initial, const Vec3& goal,
                      const NeighborPrediction& predictions, const MpcConfig& cfg,
                      const Limits& limits, const EllipsoidMetric& metric,
                      const MpcSolution* warm_start, SolveDiagnostics* diagnostics) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const int n = cfg.horizon_steps;
  const double dt = cfg.dt;
  for (const auto& traj : predictions.robot_trajectories) {
    if (static_cast<int>(traj.size()) != n) {
      throw std::invalid_argument("mpc: neighbor trajectory length != horizon_steps");
    }
  }
  for (const auto& traj : predictions.obstacle_trajectories) {
    if (static_cast<int>(traj.size()) != n) {
      throw std::invalid_argument("mpc: obstacle trajectory length != horizon_steps");
    }
  }

  const int nu = 3 * n;
  const int ns = n + 1;
  const int nv = nu + ns;
  const std::size_t n_robots = predictions.robot_trajectories.size();
  const std::size_t n_entities = n_robots + predictions.obstacle_trajectories.size();

  // Inputs-free part of the position map: base^k = p0 + k*dt*v0.
  std::vector<Vec3> base(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    base[static_cast<std::size_t>(k)] = initial.position + (k * dt) * initial.velocity;
  }

  // Quadratic cost: input effort, terminal goal distance, slack penalties.
  Eigen::MatrixXd p_mat = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd q_vec = Eigen::VectorXd::Zero(nv);
  for (int j = 0; j < nu; ++j) p_mat(j, j) = 2.0 * cfg.weight_input;
  for (int i = 0; i < n; ++i) {
    const double ci = position_coef(n, i, dt);
    for (int j = 0; j < n; ++j) {
      const double cj = position_coef(n, j, dt);
      for (int d = 0; d < 3; ++d) {
        p_mat(3 * i + d, 3 * j + d) += 2.0 * cfg.weight_goal * ci * cj;
      }
    }
  }
  const Vec3 goal_err = goal - base[static_cast<std::size_t>(n)];
  for (int j = 0; j < n; ++j) {
    const double cj = position_coef(n, j, dt);
    for (int d = 0; d < 3; ++d) {
      q_vec(3 * j + d) = -2.0 * cfg.weight_goal * cj * goal_err(d);
    }
  }
  for (int k = 0; k < ns; ++k) {
    p_mat(nu + k, nu + k) = 2.0 * cfg.weight_slack_quad;
    q_vec(nu + k) = cfg.weight_slack_lin;
  }

  SolveDiagnostics local_diag;
  SolveDiagnostics& diag = diagnostics ? *diagnostics : local_diag;
  diag = SolveDiagnostics{};

  // The planner constrains against slightly inflated bodies; checks stay exact.
  const EllipsoidMetric margined_metric = inflate_metric(metric, cfg.safety_margin);
  const double margined_radius = cfg.robot_radius + 0.5 * cfg.safety_margin;

  std::vector<ControlInput> u_init;
  if (warm_start && static_cast<int>(warm_start->inputs.size()) == n) {
    u_init.assign(warm_start->inputs.begin() + 1, warm_start->inputs.end());
    u_init.push_back(warm_start->inputs.back());
  } else {
    u_init = initial_guess(initial, goal, cfg, limits);
  }

  Candidate current = evaluate(initial, goal, u_init, predictions, cfg, metric, margined_metric);
  diag.merit_history.push_back(current.merit);

  double delta = cfg.trust_region;
  // Constraints the safeguard pass forces back in after a pruning miss.
  std::set<std::pair<int, std::size_t>> forced;  // (step k, entity index)
  bool fixed_point = false;
  int total_qp_iterations = 0;

  for (int it = 0; it < cfg.sqp_iterations && !fixed_point; ++it) {
    RowBuilder rb(nv);

    // Input box.
    for (int j = 0; j < nu; ++j) {
      rb.fresh()(j) = 1.0;
      rb.bound(-limits.u_max, limits.u_max);
    }
    // Slack nonnegativity.
    for (int k = 0; k < ns; ++k) {
      rb.fresh()(nu + k) = 1.0;
      rb.bound(0.0, kInf);
    }
    // Velocity box: v^k_d = v0_d + dt * sum_{j<k} u_{j,d}.
    for (int k = 1; k <= n; ++k) {
      for (int d = 0; d < 3; ++d) {
        auto& row = rb.fresh();
        for (int j = 0; j < k; ++j) row(3 * j + d) = dt;
        rb.bound(-limits.v_max - initial.velocity(d), limits.v_max - initial.velocity(d));
      }
    }

    // Collision constraints, linearized at the current trajectory. A support
    // hyperplane of the clearance set never over-approximates it, so any QP-
    // feasible step satisfies the true constraint for every included row.
    // Rows whose clearance exceeds the trust-region travel cannot become
    // violated within one step and are pruned.
    const double reach = std::sqrt(3.0) * delta + kPrunePad;
    const double omega_scale = std::sqrt(margined_metric.omega_diag.maxCoeff());
    int collision_rows = 0;
    for (int k = 1; k <= n; ++k) {
      const Vec3 p_lin = current.states[static_cast<std::size_t>(k)].position;
      for (std::size_t e = 0; e < n_entities; ++e) {
        const bool is_robot = e < n_robots;
        const Vec3& p_other =
            is_robot ? predictions.robot_trajectories[e][static_cast<std::size_t>(k - 1)]
                     : predictions.obstacle_trajectories[e - n_robots]
                                                        [static_cast<std::size_t>(k - 1)];
        const Vec3 d_lin = p_lin - p_other;
        Vec3 normal;
        double required;  // right-hand side of normal' * (p - p_other) + s_k >= required
        bool include = forced.count({k, e}) > 0;
        if (is_robot) {
          const double dist = d_lin.norm();
          if (!include && dist >= 2.0 * margined_radius + reach) continue;
          normal = dist > 1e-12 ? Vec3(d_lin / dist) : Vec3::UnitX();
          required = 2.0 * margined_radius;
        } else {
          const double dist = weighted_norm(d_lin, margined_metric);
          if (!include && dist >= 1.0 + omega_scale * reach) continue;
          if (dist > 1e-12) {
            normal = (margined_metric.omega_diag.array() * d_lin.array()).matrix() / dist;
          } else {
            normal = Vec3::UnitX() * margined_metric.omega_diag(0);
          }
          required = 1.0;
        }
        auto& row = rb.fresh();
        for (int j = 0; j < k; ++j) {
          const double c = position_coef(k, j, dt);
          for (int d = 0; d < 3; ++d) row(3 * j + d) = c * normal(d);
        }
        row(nu + k) = 1.0;  // slack of step k
        const double rhs =
            required + normal.dot(p_other) - normal.dot(base[static_cast<std::size_t>(k)]);
        rb.bound(rhs, kInf);
        ++collision_rows;
      }
    }

    // Trust region keeps the linearization (and pruning) honest; without
    // collision rows the subproblem is the exact convex problem and needs none.
    if (collision_rows > 0) {
      for (int k = 1; k <= n; ++k) {
        const Vec3 dev_center =
            current.states[static_cast<std::size_t>(k)].position - base[static_cast<std::size_t>(k)];
        for (int d = 0; d < 3; ++d) {
          auto& row = rb.fresh();
          for (int j = 0; j < k; ++j) row(3 * j + d) = position_coef(k, j, dt);
          rb.bound(dev_center(d) - delta, dev_center(d) + delta);
        }
      }
    }

    QpProblem qp;
    qp.P = p_mat;
    qp.q = q_vec;
    qp.A = rb.matrix();
    qp.lower = rb.lower_vec();
    qp.upper = rb.upper_vec();

    // Each subproblem is solved cold: iterates seeded on the degenerate
    // constraint boundaries of the previous linearization stall the
    // splitting method far more often than a cold start costs.
    QpResult res = solve_qp(qp, QpSettings{});
    total_qp_iterations += res.iterations;
    if (!res.converged || !res.x.allFinite()) {
      std::ostringstream msg;
      msg << "mpc: QP subproblem failed (iterations=" << res.iterations
          << ", primal_residual=" << res.primal_residual
          << ", dual_residual=" << res.dual_residual << ")";
      throw SolverError(msg.str(), res.iterations, res.primal_residual, res.dual_residual);
    }

    std::vector<ControlInput> u_cand(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      u_cand[static_cast<std::size_t>(j)].acceleration =
          res.x.segment<3>(3 * j).cwiseMax(-limits.u_max).cwiseMin(limits.u_max);
    }
    Candidate cand = evaluate(initial, goal, u_cand, predictions, cfg, metric, margined_metric);
    ++diag.sqp_iterations;

    if (cand.merit <= current.merit + 1e-9 * (1.0 + std::abs(current.merit))) {
      double step_change = 0.0;
      for (int k = 1; k <= n; ++k) {
        step_change = std::max(step_change,
                               (cand.states[static_cast<std::size_t>(k)].position -
                                current.states[static_cast<std::size_t>(k)].position)
                                   .cwiseAbs()
                                   .maxCoeff());
      }
      current = std::move(cand);
      diag.merit_history.push_back(current.merit);

      // Safeguard: if a pruned pair is violated at the accepted iterate,
      // force it into the next subproblem instead of trusting the prune.
      bool added = false;
      for (int k = 1; k <= n; ++k) {
        if (current.margined_violation[static_cast<std::size_t>(k)] <= kViolationTol) continue;
        const Vec3 p = current.states[static_cast<std::size_t>(k)].position;
        for (std::size_t e = 0; e < n_entities; ++e) {
          const bool is_robot = e < n_robots;
          const Vec3& p_other =
              is_robot ? predictions.robot_trajectories[e][static_cast<std::size_t>(k - 1)]
                       : predictions.obstacle_trajectories[e - n_robots]
                                                          [static_cast<std::size_t>(k - 1)];
          const double deficit =
              is_robot ? 2.0 * margined_radius - (p - p_other).norm()
                       : 1.0 - weighted_norm(p - p_other, margined_metric);
          if (deficit > kViolationTol && forced.insert({k, e}).second) added = true;
        }
      }
      if (!added && (collision_rows == 0 || step_change <= kStepTol)) {
        fixed_point = true;
      }
    } else {
      delta = std::max(0.5 * delta, 0.05);
    }
  }

  MpcSolution sol;
  sol.states = current.states;
  sol.inputs = current.inputs;
  sol.slacks = current.step_violation;
  // The reported objective pairs the cost decision with the returned slacks.
  double exact_cost = 0.0;
  for (const auto& u : current.inputs) {
    exact_cost += cfg.weight_input * u.acceleration.squaredNorm();
  }
  for (double s : current.step_violation) {
    exact_cost += cfg.weight_slack_lin * s + cfg.weight_slack_quad * s * s;
  }
  sol.objective =
      exact_cost + cfg.weight_goal * (current.states.back().position - goal).squaredNorm();
  // Converged means the SQP reached a fixed point of the linearization or the
  // remaining violations are within the soft-constraint tolerance.
  double max_violation = 0.0;
  for (double s : current.margined_violation) max_violation = std::max(max_violation, s);
  sol.converged = fixed_point || max_violation <= kViolationTol;

  diag.objective = sol.objective;
  diag.max_slack = max_violation;
  diag.converged = sol.converged;
  diag.qp_iterations = total_qp_iterations;
  diag.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return sol;
}

FleetPlanner::FleetPlanner(MpcConfig cfg, Limits limits, EllipsoidMetric metric, int n_robots)
    : cfg_(std::move(cfg)),
      limits_(limits),
      metric_(metric),
      last_solutions_(static_cast<std::size_t>(n_robots)),
      published_(static_cast<std::size_t>(n_robots)),
      diagnostics_(static_cast<std::size_t>(n_robots)) {
  cfg_.validate();
}

bool FleetPlanner::has_plan(int robot_index) const {
  return last_solutions_[static_cast<std::size_t>(robot_index)].has_value();
}

void FleetPlanner::reset() {
  for (auto& s : last_solutions_) s.reset();
  for (auto& p : published_) p = PlannedTrajectory{};
  for (auto& d : diagnostics_) d = SolveDiagnostics{};
}

MpcSolution& FleetPlanner::solve_robot(int i, const RobotState& state, const Vec3& goal,
                                       const NeighborPrediction& predictions) {
  auto& slot = last_solutions_[static_cast<std::size_t>(i)];
  auto& diag = diagnostics_[static_cast<std::size_t>(i)];
  const MpcSolution* warm = slot ? &*slot : nullptr;
  try {
    MpcSolution sol = solve_mpc(state, goal, predictions, cfg_, limits_, metric_, warm, &diag);
    slot = std::move(sol);
  } catch (const SolverError&) {
    // This robot coasts with zero input this tick; others are unaffected.
    diag.failed = true;
    MpcSolution fallback;
    fallback.inputs.assign(static_cast<std::size_t>(cfg_.horizon_steps), ControlInput{});
    fallback.states = rollout(state, fallback.inputs, cfg_.dt);
    fallback.slacks.assign(static_cast<std::size_t>(cfg_.horizon_steps) + 1, 0.0);
    fallback.converged = false;
    slot = std::move(fallback);
  }
  return *slot;
}

std::vector<ControlInput> FleetPlanner::plan_step_all(const std::vector<RobotState>& robots,
                                                      const Vec3Seq& goals,
                                                      const PredictionSource& source) {
  const int n = static_cast<int>(robots.size());
  std::vector<ControlInput> inputs(robots.size());
  std::vector<PlannedTrajectory> fresh(robots.size());
  for (int i = 0; i < n; ++i) {
    const NeighborPrediction pred = source(i);
    const MpcSolution& sol = solve_robot(i, robots[static_cast<std::size_t>(i)],
                                         goals[static_cast<std::size_t>(i)], pred);
    inputs[static_cast<std::size_t>(i)] = sol.inputs.front();
    fresh[static_cast<std::size_t>(i)] = to_trajectory(sol);
  }
  // Publish only after every robot has planned: within a tick nobody sees a
  // same-tick plan, which is what makes the mode communication-free.
  published_ = std::move(fresh);
  return inputs;
}

std::vector<ControlInput> FleetPlanner::centralized_sequential_step(
    const std::vector<RobotState>& robots, const Vec3Seq& goals,
    const std::vector<ObstacleState>& obstacles) {
  const int n = static_cast<int>(robots.size());
  const auto obstacle_preds = predict_obstacles_cvm(obstacles, cfg_.horizon_steps, cfg_.dt);
  std::vector<ControlInput> inputs(robots.size());
  for (int i = 0; i < n; ++i) {
    NeighborPrediction pred;
    pred.obstacle_trajectories = obstacle_preds;
    pred.robot_trajectories.reserve(robots.size() - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& plan = published_[static_cast<std::size_t>(j)];
      if (plan.positions.empty()) {
        pred.robot_trajectories.push_back(
            hover_plan(robots[static_cast<std::size_t>(j)], cfg_.horizon_steps).positions);
      } else if (j < i) {
        // Updated this tick: use as published.
        pred.robot_trajectories.push_back(plan.positions);
      } else {
        // Still the previous tick's plan: advance it one step.
        pred.robot_trajectories.push_back(shift_plan(plan).positions);
      }
    }
    const MpcSolution& sol = solve_robot(i, robots[static_cast<std::size_t>(i)],
                                         goals[static_cast<std::size_t>(i)], pred);
    inputs[static_cast<std::size_t>(i)] = sol.inputs.front();
    published_[static_cast<std::size_t>(i)] = to_trajectory(sol);
  }
  return inputs;
}

std::vector<Vec3Seq> predict_obstacles_cvm(const std::vector<ObstacleState>& obstacles,
                                           int horizon_steps, double dt) {
  std::vector<Vec3Seq> out;
  out.reserve(obstacles.size());
  for (const auto& obs : obstacles) {
    out.push_back(predict_obstacle(obs, horizon_steps, dt));
  }
  return out;
}

}  // namespace mrnav
