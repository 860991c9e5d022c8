#include "mrnav/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "mrnav/errors.hpp"
#include "mrnav/predictors.hpp"

namespace mrnav {
namespace {

using nlohmann::json;

struct InstanceOutcome {
  bool collision = false;
  bool timeout = false;
  std::vector<double> lengths;    // per robot, successful instances only
  std::vector<double> durations;  // per robot [s]
  std::vector<double> speeds;     // per robot [m/s]
  double solve_time_sum_ms = 0.0;
  long solve_count = 0;
};

InstanceOutcome run_instance(const Scenario& family, std::uint64_t instance_seed,
                             PlannerMode planner, const WorldConfig& base_world,
                             const MpcConfig& mpc, const Limits& limits,
                             const BenchmarkOptions& options) {
  WorldConfig world = base_world;
  world.n_robots = family.n_robots;
  world.n_obstacles = family.n_obstacles;

  Scenario scenario = family;
  scenario.instance_seed = instance_seed;
  const ScenarioInstance inst = generate_instance(scenario, world);

  SimOptions sim_options;
  sim_options.mode = planner;
  sim_options.weights = options.weights;
  sim_options.goal_tolerance = options.goal_tolerance;
  sim_options.t_obs = options.t_obs;
  Simulator sim(world, mpc, limits, sim_options, instance_seed);
  sim.set_scene(inst.starts, inst.goals, inst.obstacles);

  const int max_ticks = static_cast<int>(std::ceil(options.timeout_seconds / world.dt));
  for (int t = 0; t < max_ticks && !sim.all_robots_reached(); ++t) {
    sim.step();
  }

  InstanceOutcome outcome;
  const SimLog& log = sim.log();
  outcome.collision = log.any_collision();
  outcome.timeout = !sim.all_robots_reached();
  for (const auto& tick : log.ticks) {
    for (const auto& diag : tick.diagnostics) {
      outcome.solve_time_sum_ms += diag.solve_time_ms;
      ++outcome.solve_count;
    }
  }
  if (outcome.collision || outcome.timeout) return outcome;

  const auto& reach_times = sim.first_reach_time();
  for (int i = 0; i < world.n_robots; ++i) {
    const double duration = reach_times[static_cast<std::size_t>(i)];
    const long reach_tick = std::lround(duration / world.dt);
    double length = 0.0;
    for (long t = 0; t + 1 <= reach_tick; ++t) {
      const Vec3& a = log.ticks[static_cast<std::size_t>(t)].robots[static_cast<std::size_t>(i)]
                          .position;
      const Vec3 b = (t + 1 < static_cast<long>(log.ticks.size()))
                         ? log.ticks[static_cast<std::size_t>(t + 1)]
                               .robots[static_cast<std::size_t>(i)]
                               .position
                         : sim.robots()[static_cast<std::size_t>(i)].position;
      length += (b - a).norm();
    }
    outcome.lengths.push_back(length);
    outcome.durations.push_back(duration);
    outcome.speeds.push_back(duration > 0.0 ? length / duration : 0.0);
  }
  return outcome;
}

std::vector<double> collect_errors(const Vec3Seq& predicted, const Vec3Seq& truth) {
  std::vector<double> errors(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    errors[k] = (predicted[k] - truth[k]).norm();
  }
  return errors;
}

}  // namespace

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats stats;
  stats.count = static_cast<int>(values.size());
  if (values.empty()) return stats;
  stats.min = *std::min_element(values.begin(), values.end());
  stats.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.avg = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - stats.avg) * (v - stats.avg);
  stats.stddev = values.size() > 1
                     ? std::sqrt(sq / static_cast<double>(values.size() - 1))
                     : 0.0;
  return stats;
}

PlanningMetrics run_planning_benchmark(const Scenario& family, int n_instances,
                                       PlannerMode planner, const WorldConfig& world,
                                       const MpcConfig& mpc, const Limits& limits,
                                       const BenchmarkOptions& options) {
  if (planner == PlannerMode::DecentralizedRnn && !options.weights) {
    throw ModelContractError("benchmark: learned planner needs model weights");
  }
  std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(n_instances));
  const int jobs = std::max(1, options.jobs);

  auto worker = [&](int begin, int stride) {
    for (int k = begin; k < n_instances; k += stride) {
      outcomes[static_cast<std::size_t>(k)] =
          run_instance(family, family.instance_seed + static_cast<std::uint64_t>(k), planner,
                       world, mpc, limits, options);
    }
  };
  if (jobs == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j, jobs);
    for (auto& t : threads) t.join();
  }

  PlanningMetrics metrics;
  metrics.instances = n_instances;
  std::vector<double> lengths, durations, speeds;
  double solve_sum = 0.0;
  long solve_count = 0;
  for (const auto& outcome : outcomes) {
    if (outcome.collision) ++metrics.collision_instances;
    else if (outcome.timeout) ++metrics.timeout_instances;
    lengths.insert(lengths.end(), outcome.lengths.begin(), outcome.lengths.end());
    durations.insert(durations.end(), outcome.durations.begin(), outcome.durations.end());
    speeds.insert(speeds.end(), outcome.speeds.begin(), outcome.speeds.end());
    solve_sum += outcome.solve_time_sum_ms;
    solve_count += outcome.solve_count;
  }
  metrics.trajectory_length = summarize(lengths);
  metrics.trajectory_duration = summarize(durations);
  metrics.average_speed = summarize(speeds);
  metrics.mean_solve_time_ms = solve_count > 0 ? solve_sum / static_cast<double>(solve_count) : 0.0;
  return metrics;
}

std::string to_string(PredictionMethod method) {
  switch (method) {
    case PredictionMethod::Cvm: return "cvm";
    case PredictionMethod::Rnn: return "rnn";
    case PredictionMethod::RnnNoEnvironment: return "rnn_no_env";
    case PredictionMethod::Playback: return "playback";
  }
  return "unknown";
}

std::vector<PredictionMetrics> eval_prediction(const Dataset& test_dataset,
                                               const std::vector<PredictionMethod>& methods,
                                               const neural::ModelWeights* weights) {
  const int horizon = test_dataset.t_horizon;
  const double dt = test_dataset.dt;
  const std::size_t n_records = test_dataset.records.size();

  for (PredictionMethod m : methods) {
    if ((m == PredictionMethod::Rnn || m == PredictionMethod::RnnNoEnvironment) && !weights) {
      throw ModelContractError("eval_prediction: learned methods need model weights");
    }
  }

  // Ground truth positions: integrate the recorded future velocities from the
  // record origin (identical to the logged executed positions).
  std::vector<Vec3Seq> truth(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    const auto& rec = test_dataset.records[i];
    Vec3 p = rec.observation.ego_position;
    truth[i].reserve(static_cast<std::size_t>(horizon));
    for (const auto& v : rec.future_velocities) {
      p += dt * v;
      truth[i].push_back(p);
    }
  }

  std::vector<PredictionMetrics> results;
  for (PredictionMethod method : methods) {
    std::vector<double> sum(static_cast<std::size_t>(horizon), 0.0);
    std::vector<double> sum_sq(static_cast<std::size_t>(horizon), 0.0);
    for (std::size_t i = 0; i < n_records; ++i) {
      const auto& rec = test_dataset.records[i];
      Vec3Seq predicted;
      switch (method) {
        case PredictionMethod::Cvm: {
          const Vec3 v = rec.observation.ego_velocities.back();
          Vec3 p = rec.observation.ego_position;
          predicted.reserve(static_cast<std::size_t>(horizon));
          for (int k = 0; k < horizon; ++k) {
            p += dt * v;
            predicted.push_back(p);
          }
          break;
        }
        case PredictionMethod::Rnn:
          predicted = predict_rnn(rec.observation, *weights, horizon, dt).positions;
          break;
        case PredictionMethod::RnnNoEnvironment:
          predicted = predict_rnn(rec.observation, *weights, horizon, dt, true).positions;
          break;
        case PredictionMethod::Playback:
          predicted = truth[i];
          break;
      }
      const auto errors = collect_errors(predicted, truth[i]);
      for (int k = 0; k < horizon; ++k) {
        sum[static_cast<std::size_t>(k)] += errors[static_cast<std::size_t>(k)];
        sum_sq[static_cast<std::size_t>(k)] +=
            errors[static_cast<std::size_t>(k)] * errors[static_cast<std::size_t>(k)];
      }
    }
    PredictionMetrics metrics;
    metrics.method = method;
    metrics.mean_error.resize(static_cast<std::size_t>(horizon), 0.0);
    metrics.std_error.resize(static_cast<std::size_t>(horizon), 0.0);
    if (n_records > 0) {
      for (int k = 0; k < horizon; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        const double mean = sum[ks] / static_cast<double>(n_records);
        metrics.mean_error[ks] = mean;
        const double var =
            n_records > 1
                ? std::max(0.0, (sum_sq[ks] - static_cast<double>(n_records) * mean * mean) /
                                    static_cast<double>(n_records - 1))
                : 0.0;
        metrics.std_error[ks] = std::sqrt(var);
      }
    }
    results.push_back(std::move(metrics));
  }
  return results;
}

namespace {

json stats_to_json(const SummaryStats& stats) {
  return json{{"min", stats.min},
              {"avg", stats.avg},
              {"stddev", stats.stddev},
              {"max", stats.max},
              {"count", stats.count}};
}

SummaryStats stats_from_json(const json& j) {
  SummaryStats stats;
  stats.min = j.at("min").get<double>();
  stats.avg = j.at("avg").get<double>();
  stats.stddev = j.at("stddev").get<double>();
  stats.max = j.at("max").get<double>();
  stats.count = j.at("count").get<int>();
  return stats;
}

}  // namespace

void export_results(const EvalReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);

  {
    std::ofstream os(directory / "planning.csv", std::ios::trunc);
    if (!os) throw ConfigError("cannot write planning.csv");
    os << "scenario,planner,instances,collision_instances,timeout_instances,"
          "length_min,length_avg,length_std,length_max,"
          "duration_min,duration_avg,duration_std,duration_max,"
          "speed_avg,speed_std,mean_solve_time_ms\n";
    char buf[512];
    for (const auto& row : report.planning) {
      const auto& m = row.metrics;
      std::snprintf(buf, sizeof(buf),
                    "%s,%s,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                    "%.17g,%.17g\n",
                    row.scenario.c_str(), row.planner.c_str(), m.instances,
                    m.collision_instances, m.timeout_instances, m.trajectory_length.min,
                    m.trajectory_length.avg, m.trajectory_length.stddev, m.trajectory_length.max,
                    m.trajectory_duration.min, m.trajectory_duration.avg,
                    m.trajectory_duration.stddev, m.trajectory_duration.max,
                    m.average_speed.avg, m.average_speed.stddev, m.mean_solve_time_ms);
      os << buf;
    }
  }

  {
    std::ofstream os(directory / "prediction.csv", std::ios::trunc);
    if (!os) throw ConfigError("cannot write prediction.csv");
    os << "predictor,step,time,mean_error,std_error\n";
    char buf[256];
    for (const auto& metrics : report.prediction) {
      for (std::size_t k = 0; k < metrics.mean_error.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g\n",
                      to_string(metrics.method).c_str(), k + 1,
                      static_cast<double>(k + 1) * report.dt, metrics.mean_error[k],
                      metrics.std_error[k]);
        os << buf;
      }
    }
  }

  json summary;
  summary["dt"] = report.dt;
  summary["planning"] = json::array();
  for (const auto& row : report.planning) {
    summary["planning"].push_back(
        json{{"scenario", row.scenario},
             {"planner", row.planner},
             {"instances", row.metrics.instances},
             {"collision_instances", row.metrics.collision_instances},
             {"timeout_instances", row.metrics.timeout_instances},
             {"trajectory_length", stats_to_json(row.metrics.trajectory_length)},
             {"trajectory_duration", stats_to_json(row.metrics.trajectory_duration)},
             {"average_speed", stats_to_json(row.metrics.average_speed)},
             {"mean_solve_time_ms", row.metrics.mean_solve_time_ms}});
  }
  summary["prediction"] = json::array();
  for (const auto& metrics : report.prediction) {
    summary["prediction"].push_back(json{{"method", to_string(metrics.method)},
                                         {"mean_error", metrics.mean_error},
                                         {"std_error", metrics.std_error}});
  }
  std::ofstream os(directory / "summary.json", std::ios::trunc);
  if (!os) throw ConfigError("cannot write summary.json");
  os << summary.dump(2) << "\n";
}

EvalReport load_results_json(const std::filesystem::path& json_path) {
  std::ifstream is(json_path);
  if (!is) throw ConfigError("cannot open " + json_path.string());
  json summary = json::parse(is);

  EvalReport report;
  report.dt = summary.at("dt").get<double>();
  for (const auto& row : summary.at("planning")) {
    BenchmarkReportRow out;
    out.scenario = row.at("scenario").get<std::string>();
    out.planner = row.at("planner").get<std::string>();
    out.metrics.instances = row.at("instances").get<int>();
    out.metrics.collision_instances = row.at("collision_instances").get<int>();
    out.metrics.timeout_instances = row.at("timeout_instances").get<int>();
    out.metrics.trajectory_length = stats_from_json(row.at("trajectory_length"));
    out.metrics.trajectory_duration = stats_from_json(row.at("trajectory_duration"));
    out.metrics.average_speed = stats_from_json(row.at("average_speed"));
    out.metrics.mean_solve_time_ms = row.at("mean_solve_time_ms").get<double>();
    report.planning.push_back(std::move(out));
  }
  for (const auto& row : summary.at("prediction")) {
    PredictionMetrics metrics;
    const std::string name = row.at("method").get<std::string>();
    if (name == "cvm") metrics.method = PredictionMethod::Cvm;
    else if (name == "rnn") metrics.method = PredictionMethod::Rnn;
    else if (name == "rnn_no_env") metrics.method = PredictionMethod::RnnNoEnvironment;
    else if (name == "playback") metrics.method = PredictionMethod::Playback;
    else throw ConfigError("unknown prediction method in summary: " + name);
    metrics.mean_error = row.at("mean_error").get<std::vector<double>>();
    metrics.std_error = row.at("std_error").get<std::vector<double>>();
    report.prediction.push_back(std::move(metrics));
  }
  return report;
}

}  // namespace mrnav
