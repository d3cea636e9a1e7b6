#pragma once

// Training loop and policy evaluation for one (state, action) representation
// pair and one seed.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "orient/ddpg_her.hpp"
#include "orient/orientation_env.hpp"

namespace orient {

struct ExperimentConfig {
  Repr state_repr = Repr::kLieAlgebra;
  Repr action_repr = Repr::kLieAlgebra;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  long total_steps = 200000;
  int episode_len = 50;
  double max_angle = kDefaultMaxAngle;
  double eps_orient = 0.1;
  int final_eval_rollouts = 160;
  int eval_every = 2000;
  int eval_episodes = 20;
  Hyperparams hp;
  std::string out_dir = "results";

  void validate() const;
  EnvConfig env_config(std::uint64_t env_seed) const;
  ActionSpec action_spec() const { return {action_repr, max_angle}; }
};

// Independent random streams of one run, derived from the run seed.
enum class Stream : std::uint64_t {
  kEnv = 1,
  kInit = 2,
  kExplore = 3,
  kHer = 4,
  kReplay = 5,
  kEval = 6,
  kFinalEval = 7,
};
Rng make_stream(std::uint64_t run_seed, Stream stream);
std::uint64_t stream_seed(std::uint64_t run_seed, Stream stream);

struct MetricsRow {
  long env_step = 0;
  double eval_success_rate = 0.0;
  double eval_avg_reward_per_step = 0.0;
  double train_s = 0.0;    // cumulative network-update time
  double rollout_s = 0.0;  // cumulative data-collection time
};

struct EvalResult {
  double success_rate = 0.0;
  double avg_reward_per_step = 0.0;
};

struct RunTiming {
  double train_s = 0.0;
  double rollout_s = 0.0;
  double decode_s = 0.0;  // part of rollout_s spent decoding actions
  double total_s = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  long env_steps = 0;
  TrainedPolicy policy;
  std::vector<MetricsRow> metrics;
  EvalResult final_eval;
  RunTiming timing;
  std::size_t degenerate_decodes = 0;
};

// Maps the current environment and its observation to a relative rotation.
using Controller =
    std::function<Rotation(const OrientationEnv& env, std::span<const double> observation)>;

// n episodes of `controller` on an environment seeded with `seed`.
EvalResult evaluate(const Controller& controller, const EnvConfig& env, int n);
EvalResult evaluate(const TrainedPolicy& policy, const EnvConfig& env, int n);

// Full training run. Throws DivergenceError on non-finite losses.
RunResult train(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace orient
