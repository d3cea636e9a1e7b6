// Command-line driver for the orientation-control experiments.
//
//   orient train --state-rep lie-algebra --action-rep lie-algebra --seeds 0-4 --out results
//   orient grid --all --out results
//   orient eval --checkpoint results/lie-algebra__lie-algebra/seed_0.policy --rollouts 160
//   orient bench-timing --out results
//
// ORIENT_WORKERS overrides the number of parallel runs.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orient/experiment.hpp"

namespace {

using namespace orient;

// Flags shared by train / grid / bench-timing. Anything set on the command
// line overrides the config file.
struct CommonFlags {
  std::string config_file;
  std::optional<std::string> seeds;
  std::optional<long> steps;
  std::optional<double> eps_orient;
  std::optional<double> max_angle;
  std::optional<std::string> out;
  std::vector<std::string> overrides;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "key=value config file");
    app->add_option("--seeds", seeds, "seed list, e.g. 0,1,2 or 0-4");
    app->add_option("--steps", steps, "environment steps per run");
    app->add_option("--eps-orient", eps_orient, "success threshold (rad)");
    app->add_option("--max-angle", max_angle, "maximum action angle (rad)");
    app->add_option("--out", out, "output directory");
    app->add_option("--set", overrides, "extra key=value overrides")->allow_extra_args(false);
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw std::runtime_error("cannot open config file " + config_file);
      apply_config_file(cfg, in);
    }
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + kv);
      apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seeds) cfg.seeds = parse_seed_list(*seeds);
    if (steps) cfg.total_steps = *steps;
    if (eps_orient) cfg.eps_orient = *eps_orient;
    if (max_angle) cfg.max_angle = *max_angle;
    if (out) cfg.out_dir = *out;
    return cfg;
  }
};

void print_summary(const ExperimentOutputs& o) {
  const SummaryRecord& s = o.summary;
  std::printf("%-45s avg_train_success=%.3f final_success=%.3f final_reward=%.3f train_s=%.1f "
              "rollout_s=%.1f\n",
              cell_name(s.config.state_repr, s.config.action_repr).c_str(),
              s.avg_training_success.mean, s.final_success_rate.mean,
              s.final_avg_reward_per_step.mean, s.train_s, s.rollout_s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orientation-control reinforcement learning experiments"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string state_rep;
  std::string action_rep;
  auto* train_cmd = app.add_subcommand("train", "train one state/action representation pair");
  train_flags.add_to(train_cmd);
  train_cmd->add_option("--state-rep", state_rep, "state representation tag");
  train_cmd->add_option("--action-rep", action_rep, "action representation tag");

  CommonFlags grid_flags;
  bool grid_all = false;
  auto* grid_cmd = app.add_subcommand("grid", "run all 36 state x action pairs");
  grid_flags.add_to(grid_cmd);
  grid_cmd->add_flag("--all", grid_all, "run the full 6x6 grid")->required();

  std::string checkpoint;
  int rollouts = 160;
  std::uint64_t eval_seed = 12345;
  double eval_eps = 0.1;
  int eval_len = 50;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved policy");
  eval_cmd->add_option("--checkpoint", checkpoint, "policy file")->required();
  eval_cmd->add_option("--rollouts", rollouts, "number of episodes");
  eval_cmd->add_option("--seed", eval_seed, "environment seed");
  eval_cmd->add_option("--eps-orient", eval_eps, "success threshold (rad)");
  eval_cmd->add_option("--episode-len", eval_len, "steps per episode");

  CommonFlags bench_flags;
  int trials = 7;
  auto* bench_cmd = app.add_subcommand("bench-timing", "decode + update cost of same-representation pairs");
  bench_flags.add_to(bench_cmd);
  bench_cmd->add_option("--trials", trials, "round-robin repetitions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      ExperimentConfig cfg = train_flags.build();
      if (!state_rep.empty()) cfg.state_repr = parse_repr(state_rep);
      if (!action_rep.empty()) cfg.action_repr = parse_repr(action_rep);
      print_summary(run_experiment(cfg, worker_count()));
    } else if (*grid_cmd) {
      const ExperimentConfig cfg = grid_flags.build();
      for (const ExperimentOutputs& o : run_grid(cfg, worker_count())) print_summary(o);
    } else if (*eval_cmd) {
      std::ifstream in(checkpoint);
      if (!in) throw std::runtime_error("cannot open checkpoint " + checkpoint);
      const TrainedPolicy policy = TrainedPolicy::load(in);
      EnvConfig env;
      env.state_repr = policy.state_repr;
      env.max_angle = policy.action.max_angle;
      env.eps_orient = eval_eps;
      env.episode_len = eval_len;
      env.seed = eval_seed;
      const EvalResult r = evaluate(policy, env, rollouts);
      std::printf("success_rate=%.17g\navg_reward_per_step=%.17g\n", r.success_rate,
                  r.avg_reward_per_step);
    } else if (*bench_cmd) {
      const ExperimentConfig cfg = bench_flags.build();
      const auto entries = bench_timing(cfg, trials);
      write_timing(std::cout, entries);
      std::filesystem::create_directories(cfg.out_dir);
      const auto path = std::filesystem::path(cfg.out_dir) / "timing.csv";
      std::ofstream out(path);
      write_timing(out, entries);
      if (!out) throw std::runtime_error("write failed: " + path.string());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
