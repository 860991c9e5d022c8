// mrnav - multi-robot navigation pipelines: demonstration data generation,
// prediction model training, closed-loop simulation and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "mrnav/config.hpp"
#include "mrnav/datagen.hpp"
#include "mrnav/errors.hpp"
#include "mrnav/eval.hpp"
#include "mrnav/manifest.hpp"
#include "mrnav/neural/train.hpp"
#include "mrnav/neural/weights_io.hpp"
#include "mrnav/sim.hpp"

namespace fs = std::filesystem;
using namespace mrnav;

namespace {

struct CommonArgs {
  std::string config_path;
  ConfigFile config;

  void load() {
    config = config_path.empty() ? ConfigFile{} : ConfigFile::parse_file(config_path);
  }
};

std::string hex64(std::uint64_t value) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void write_loss_curve(const neural::TrainResult& result, const fs::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw ConfigError("cannot write loss curve: " + path.string());
  std::fputs("epoch,train_loss,val_loss\n", f);
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    std::fprintf(f, "%zu,%.17g,%.17g\n", e + 1, result.train_loss[e], result.val_loss[e]);
  }
  std::fclose(f);
}

int cmd_gen_data(CommonArgs& common, const std::string& out_path, long seed_override,
                 long ticks_override) {
  common.load();
  if (seed_override >= 0) common.config.set("sim.rng_seed", std::to_string(seed_override));
  if (ticks_override >= 0) common.config.set("sim.n_sim_steps", std::to_string(ticks_override));

  const SimRunConfig run_cfg = load_sim_run_config(common.config, /*require_steps=*/true);
  const int t_obs = common.config.get_int("predict.t_obs", 20);
  const int t_horizon = common.config.get_int("predict.t_horizon", 20);
  if (run_cfg.n_sim_steps > 0 && run_cfg.n_sim_steps <= t_obs + t_horizon) {
    throw ConfigError("sim.n_sim_steps must exceed predict.t_obs + predict.t_horizon");
  }

  PipelineManifest manifest;
  manifest.tool = "gen-data";
  manifest.config_echo = common.config.items();
  manifest.seed = run_cfg.rng_seed;
  if (!common.config_path.empty()) {
    manifest.inputs.emplace_back(common.config_path, hex64(fnv1a_hash_file(common.config_path)));
  }
  manifest.outputs.push_back(out_path);

  const DemonstrationResult demo = run_demonstration_collision_free(run_cfg);
  for (std::uint64_t rejected : demo.rejected_seeds) {
    std::cout << "rejected seed " << rejected << " (collision in demonstration)\n";
  }
  if (!demo.collision_free && run_cfg.n_sim_steps > 0) {
    std::cerr << "error: demonstration kept colliding after " << demo.attempts << " attempts\n";
    return 2;
  }

  auto records = extract_dataset(demo.log, t_obs, t_horizon);
  const Dataset dataset =
      make_dataset(std::move(records), run_cfg.world.dt, t_obs, t_horizon, manifest.hash());
  save_dataset(dataset, out_path);
  manifest.write(out_path + ".manifest.json");

  std::cout << "dataset: " << out_path << "\n"
            << "records: " << dataset.records.size() << "\n"
            << "ticks: " << demo.log.ticks.size() << " attempts: " << demo.attempts << "\n"
            << "collision-free: " << (demo.collision_free ? "yes" : "yes (empty run)") << "\n";
  return 0;
}

int cmd_train(CommonArgs& common, const std::string& dataset_path, const std::string& out_path,
              std::string curve_path, const std::string& resume_path, double lr_override,
              long epochs_override, long batch_override, long seed_override, bool ablation) {
  common.load();
  if (lr_override >= 0.0) common.config.set("train.learning_rate", std::to_string(lr_override));
  if (epochs_override >= 0) common.config.set("train.epochs", std::to_string(epochs_override));
  if (batch_override >= 0) common.config.set("train.batch_size", std::to_string(batch_override));
  if (seed_override >= 0) common.config.set("train.rng_seed", std::to_string(seed_override));

  neural::TrainConfig train_cfg = load_train_config(common.config);
  train_cfg.zero_environment = ablation;

  const Dataset dataset = load_dataset(dataset_path);
  if (dataset.records.empty()) throw ConfigError("training dataset has no records");
  const auto samples = to_training_samples(dataset.records);

  neural::ModelDims dims = load_model_dims(common.config);
  dims.t_obs = dataset.t_obs;
  dims.t_horizon = dataset.t_horizon;

  if (curve_path.empty()) curve_path = out_path + ".curve.csv";

  PipelineManifest manifest;
  manifest.tool = "train";
  manifest.config_echo = common.config.items();
  manifest.seed = train_cfg.rng_seed;
  manifest.inputs.emplace_back(dataset_path, hex64(fnv1a_hash_file(dataset_path)));
  if (!resume_path.empty()) {
    manifest.inputs.emplace_back(resume_path, hex64(fnv1a_hash_file(resume_path)));
  }
  if (!common.config_path.empty()) {
    manifest.inputs.emplace_back(common.config_path, hex64(fnv1a_hash_file(common.config_path)));
  }
  manifest.outputs.push_back(out_path);
  manifest.outputs.push_back(curve_path);

  neural::TrainResult result;
  try {
    if (resume_path.empty()) {
      result = neural::train(samples, dims, train_cfg);
    } else {
      const neural::ModelWeights initial = neural::load_weights(resume_path);
      result = neural::train_from(samples, initial, train_cfg);
    }
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << " (last finite epoch " << e.last_finite_epoch << ")\n";
    return 2;
  }

  neural::save_weights(result.weights, out_path, manifest.hash());
  write_loss_curve(result, curve_path);
  manifest.write(out_path + ".manifest.json");

  std::cout << "weights: " << out_path << "\n"
            << "epochs run: " << result.train_loss.size() << " best epoch: "
            << result.best_epoch + 1 << "\n";
  if (!result.val_loss.empty()) {
    std::cout << "best validation loss: "
              << result.val_loss[static_cast<std::size_t>(result.best_epoch)] << "\n";
  }
  return 0;
}

int cmd_simulate(CommonArgs& common, const std::string& scenario_name,
                 const std::string& planner_name, const std::string& weights_path,
                 const std::string& out_path, long seed, long ticks, double timeout_s,
                 bool log_plans) {
  common.load();
  SimRunConfig run_cfg = load_sim_run_config(common.config, /*require_steps=*/false);
  const PlannerMode mode = planner_mode_from_string(planner_name);

  SimOptions options;
  options.mode = mode;
  options.goal_tolerance = run_cfg.goal_tolerance;
  options.record_plans = log_plans;
  options.t_obs = common.config.get_int("predict.t_obs", 20);
  if (mode == PlannerMode::DecentralizedRnn) {
    if (weights_path.empty()) {
      std::cerr << "error: planner 'rnn' requires --weights\n";
      return 1;
    }
    options.weights =
        std::make_shared<neural::ModelWeights>(neural::load_weights(weights_path));
  }

  Scenario scenario;
  scenario.kind = scenario_kind_from_string(scenario_name);
  scenario.n_robots = run_cfg.world.n_robots;
  scenario.n_obstacles = run_cfg.world.n_obstacles;
  scenario.instance_seed = static_cast<std::uint64_t>(seed);

  PipelineManifest manifest;
  manifest.tool = "simulate";
  manifest.config_echo = common.config.items();
  manifest.seed = scenario.instance_seed;
  if (!common.config_path.empty()) {
    manifest.inputs.emplace_back(common.config_path, hex64(fnv1a_hash_file(common.config_path)));
  }
  if (!weights_path.empty()) {
    manifest.inputs.emplace_back(weights_path, hex64(fnv1a_hash_file(weights_path)));
  }
  manifest.outputs.push_back(out_path);

  const ScenarioInstance instance = generate_instance(scenario, run_cfg.world);
  Simulator sim(run_cfg.world, run_cfg.mpc, run_cfg.limits, options, scenario.instance_seed);
  sim.set_scene(instance.starts, instance.goals, instance.obstacles);

  if (ticks >= 0) {
    sim.run(static_cast<int>(ticks));
  } else {
    const int max_ticks = static_cast<int>(timeout_s / run_cfg.world.dt);
    for (int t = 0; t < max_ticks && !sim.all_robots_reached(); ++t) sim.step();
  }

  write_trajectory_log(sim.log(), out_path, manifest.hash());
  manifest.write(out_path + ".manifest.json");

  const bool collided = sim.log().any_collision();
  std::cout << "log: " << out_path << "\n"
            << "ticks: " << sim.log().ticks.size() << "\n"
            << "collisions: " << (collided ? "yes" : "no") << "\n"
            << "all robots reached: " << (sim.all_robots_reached() ? "yes" : "no") << "\n";
  return 0;
}

int cmd_eval_pred(const std::string& dataset_path, const std::string& weights_path,
                  const std::string& out_dir, const std::string& methods_csv) {
  const Dataset dataset = load_dataset(dataset_path);
  std::unique_ptr<neural::ModelWeights> weights;
  if (!weights_path.empty()) {
    weights = std::make_unique<neural::ModelWeights>(neural::load_weights(weights_path));
  }

  std::vector<PredictionMethod> methods;
  std::stringstream ss(methods_csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token == "cvm") methods.push_back(PredictionMethod::Cvm);
    else if (token == "rnn") methods.push_back(PredictionMethod::Rnn);
    else if (token == "rnn_no_env") methods.push_back(PredictionMethod::RnnNoEnvironment);
    else if (token == "playback") methods.push_back(PredictionMethod::Playback);
    else throw ConfigError("unknown prediction method '" + token + "'");
  }

  EvalReport report;
  report.dt = dataset.dt;
  report.prediction = eval_prediction(dataset, methods, weights.get());
  export_results(report, out_dir);

  std::cout << "records: " << dataset.records.size() << "\n";
  for (const auto& metrics : report.prediction) {
    std::cout << to_string(metrics.method) << " final-step mean error: "
              << (metrics.mean_error.empty() ? 0.0 : metrics.mean_error.back()) << " m\n";
  }
  std::cout << "results: " << out_dir << "\n";
  return 0;
}

int cmd_bench_plan(CommonArgs& common, const std::string& scenario_name,
                   const std::string& planners_csv, int instances, long seed,
                   const std::string& weights_path, const std::string& out_dir, int jobs,
                   double timeout_s) {
  common.load();
  SimRunConfig run_cfg = load_sim_run_config(common.config, /*require_steps=*/false);

  Scenario family;
  family.kind = scenario_kind_from_string(scenario_name);
  family.n_robots = run_cfg.world.n_robots;
  family.n_obstacles = run_cfg.world.n_obstacles;
  family.instance_seed = static_cast<std::uint64_t>(seed);

  BenchmarkOptions options;
  options.timeout_seconds = timeout_s;
  options.goal_tolerance = run_cfg.goal_tolerance;
  options.t_obs = common.config.get_int("predict.t_obs", 20);
  options.jobs = jobs;

  std::vector<PlannerMode> planners;
  std::stringstream ss(planners_csv);
  std::string token;
  while (std::getline(ss, token, ',')) planners.push_back(planner_mode_from_string(token));
  for (PlannerMode mode : planners) {
    if (mode == PlannerMode::DecentralizedRnn) {
      if (weights_path.empty()) {
        std::cerr << "error: planner 'rnn' requires --weights\n";
        return 1;
      }
      options.weights =
          std::make_shared<neural::ModelWeights>(neural::load_weights(weights_path));
    }
  }

  EvalReport report;
  report.dt = run_cfg.world.dt;
  for (PlannerMode mode : planners) {
    const PlanningMetrics metrics = run_planning_benchmark(
        family, instances, mode, run_cfg.world, run_cfg.mpc, run_cfg.limits, options);
    report.planning.push_back({to_string(family.kind), to_string(mode), metrics});
    std::printf("%-22s %-12s collisions %d/%d timeouts %d  dur %.2f+/-%.2f s  len %.2f m  "
                "solve %.2f ms\n",
                to_string(family.kind).c_str(), to_string(mode).c_str(),
                metrics.collision_instances, metrics.instances, metrics.timeout_instances,
                metrics.trajectory_duration.avg, metrics.trajectory_duration.stddev,
                metrics.trajectory_length.avg, metrics.mean_solve_time_ms);
  }
  export_results(report, out_dir);
  std::cout << "results: " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-robot navigation: data generation, training, simulation, evaluation"};
  app.require_subcommand(1);

  CommonArgs common;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "run demonstrations and emit a dataset");
  std::string gen_out;
  long gen_seed = -1, gen_ticks = -1;
  gen->add_option("--config", common.config_path, "configuration file")->required();
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_option("--seed", gen_seed, "override sim.rng_seed");
  gen->add_option("--ticks", gen_ticks, "override sim.n_sim_steps");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the prediction model on a dataset");
  std::string train_dataset, train_out, train_curve, train_resume;
  double train_lr = -1.0;
  long train_epochs = -1, train_batch = -1, train_seed = -1;
  bool train_ablation = false;
  train_cmd->add_option("--config", common.config_path, "configuration file");
  train_cmd->add_option("--dataset", train_dataset, "training dataset")->required();
  train_cmd->add_option("--out", train_out, "output weights path")->required();
  train_cmd->add_option("--curve", train_curve, "loss curve CSV (default <out>.curve.csv)");
  train_cmd->add_option("--resume", train_resume, "continue from an existing weights file");
  train_cmd->add_option("--lr", train_lr, "override train.learning_rate");
  train_cmd->add_option("--epochs", train_epochs, "override train.epochs");
  train_cmd->add_option("--batch", train_batch, "override train.batch_size");
  train_cmd->add_option("--seed", train_seed, "override train.rng_seed");
  train_cmd->add_flag("--ablation", train_ablation, "train with the environment encoding zeroed");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run one scenario instance and log it");
  std::string sim_scenario = "random", sim_planner = "centralized", sim_weights, sim_out;
  long sim_seed = 1, sim_ticks = -1;
  double sim_timeout = 60.0;
  bool sim_log_plans = false;
  sim_cmd->add_option("--config", common.config_path, "configuration file")->required();
  sim_cmd->add_option("--scenario", sim_scenario, "symmetric|asymmetric|pairwise|random");
  sim_cmd->add_option("--planner", sim_planner, "centralized|cvm|rnn|oracle");
  sim_cmd->add_option("--weights", sim_weights, "model weights (planner rnn)");
  sim_cmd->add_option("--out", sim_out, "trajectory log path")->required();
  sim_cmd->add_option("--seed", sim_seed, "instance seed");
  sim_cmd->add_option("--ticks", sim_ticks, "run exactly this many ticks (default: to goal)");
  sim_cmd->add_option("--timeout", sim_timeout, "simulated seconds before giving up");
  sim_cmd->add_flag("--log-plans", sim_log_plans, "also write the per-tick plans");

  // eval-pred
  auto* pred_cmd = app.add_subcommand("eval-pred", "prediction error study on a test dataset");
  std::string pred_dataset, pred_weights, pred_out = "eval_pred";
  std::string pred_methods = "cvm,rnn,rnn_no_env";
  pred_cmd->add_option("--dataset", pred_dataset, "held-out test dataset")->required();
  pred_cmd->add_option("--weights", pred_weights, "model weights");
  pred_cmd->add_option("--out", pred_out, "output directory");
  pred_cmd->add_option("--methods", pred_methods, "comma list: cvm,rnn,rnn_no_env,playback");

  // bench-plan
  auto* bench_cmd = app.add_subcommand("bench-plan", "planner comparison over instances");
  std::string bench_scenario = "asymmetric", bench_planners = "centralized,cvm,rnn";
  std::string bench_weights, bench_out = "bench_plan";
  int bench_instances = 10, bench_jobs = 1;
  long bench_seed = 1;
  double bench_timeout = 60.0;
  bench_cmd->add_option("--config", common.config_path, "configuration file")->required();
  bench_cmd->add_option("--scenario", bench_scenario, "symmetric|asymmetric|pairwise|random");
  bench_cmd->add_option("--planner", bench_planners, "comma list of planners");
  bench_cmd->add_option("--instances", bench_instances, "instances per planner");
  bench_cmd->add_option("--seed", bench_seed, "base instance seed");
  bench_cmd->add_option("--weights", bench_weights, "model weights (planner rnn)");
  bench_cmd->add_option("--out", bench_out, "output directory");
  bench_cmd->add_option("--jobs", bench_jobs, "concurrent instances");
  bench_cmd->add_option("--timeout", bench_timeout, "simulated seconds per instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(common, gen_out, gen_seed, gen_ticks);
    if (train_cmd->parsed()) {
      return cmd_train(common, train_dataset, train_out, train_curve, train_resume, train_lr,
                       train_epochs, train_batch, train_seed, train_ablation);
    }
    if (sim_cmd->parsed()) {
      return cmd_simulate(common, sim_scenario, sim_planner, sim_weights, sim_out, sim_seed,
                          sim_ticks, sim_timeout, sim_log_plans);
    }
    if (pred_cmd->parsed()) {
      return cmd_eval_pred(pred_dataset, pred_weights, pred_out, pred_methods);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench_plan(common, bench_scenario, bench_planners, bench_instances, bench_seed,
                            bench_weights, bench_out, bench_jobs, bench_timeout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
