#include "orient/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <stdexcept>

namespace orient {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be positive");
  if (final_eval_rollouts < 1) throw std::invalid_argument("final_eval_rollouts must be positive");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be positive");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be positive");
  env_config(0).validate();
  hp.validate();
}

EnvConfig ExperimentConfig::env_config(std::uint64_t env_seed) const {
  EnvConfig env;
  env.episode_len = episode_len;
  env.max_angle = max_angle;
  env.eps_orient = eps_orient;
  env.state_repr = state_repr;
  env.seed = env_seed;
  return env;
}

std::uint64_t stream_seed(std::uint64_t run_seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed),
                    static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Rng make_stream(std::uint64_t run_seed, Stream stream) {
  return Rng(stream_seed(run_seed, stream));
}

EvalResult evaluate(const Controller& controller, const EnvConfig& env_cfg, int n) {
  if (n < 1) throw std::invalid_argument("evaluate: need at least one episode");
  OrientationEnv env(env_cfg);
  int successes = 0;
  double total_reward = 0.0;
  long steps = 0;
  for (int ep = 0; ep < n; ++ep) {
    StepResult r = env.reset();
    bool success = false;
    while (!env.episode_over()) {
      r = env.step(controller(env, r.observation));
      total_reward += r.reward;
      ++steps;
      success = success || r.success;
    }
    successes += success ? 1 : 0;
  }
  return {static_cast<double>(successes) / n, total_reward / static_cast<double>(steps)};
}

EvalResult evaluate(const TrainedPolicy& policy, const EnvConfig& env, int n) {
  if (env.state_repr != policy.state_repr) {
    throw std::invalid_argument("evaluate: environment and policy state representations differ");
  }
  Rng unused(0);
  const ExplorationConfig none;
  return evaluate(
      [&](const OrientationEnv&, std::span<const double> obs) {
        const Eigen::VectorXd raw = act(policy.actor, obs, false, none, unused);
        return decode_action(std::span<const double>(raw.data(), raw.size()), policy.action)
            .action;
      },
      env, n);
}

RunResult train(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto t_start = Clock::now();
  const Hyperparams& hp = cfg.hp;

  RunResult result;
  result.seed = seed;

  Rng init_rng = make_stream(seed, Stream::kInit);
  Rng explore_rng = make_stream(seed, Stream::kExplore);
  Rng her_rng = make_stream(seed, Stream::kHer);
  Rng replay_rng = make_stream(seed, Stream::kReplay);

  const EnvConfig env_cfg = cfg.env_config(stream_seed(seed, Stream::kEnv));
  const EnvConfig eval_cfg = cfg.env_config(stream_seed(seed, Stream::kEval));
  OrientationEnv env(env_cfg);
  ActionDecoder decoder(cfg.action_spec());

  const int obs_size = static_cast<int>(2 * obs_dim(cfg.state_repr));
  const int act_size = static_cast<int>(action_dim(cfg.action_repr));
  DdpgAgent agent(obs_size, act_size, hp, init_rng);
  ReplayBuffer buffer(hp.buffer_episodes);
  const ExplorationConfig exploration{hp.noise_sigma, hp.random_action_prob};

  auto snapshot = [&] {
    return TrainedPolicy{agent.actor(), cfg.state_repr, cfg.action_spec()};
  };
  auto log_eval = [&](long step) {
    const EvalResult e = evaluate(snapshot(), eval_cfg, cfg.eval_episodes);
    result.metrics.push_back({step, e.success_rate, e.avg_reward_per_step,
                              result.timing.train_s, result.timing.rollout_s});
  };

  long steps = 0;
  long next_eval = cfg.eval_every;
  while (steps < cfg.total_steps) {
    // Collect one episode.
    const auto t_rollout = Clock::now();
    const int len = static_cast<int>(std::min<long>(cfg.episode_len, cfg.total_steps - steps));
    StepResult r = env.reset();
    EpisodeRecord episode;
    episode.goal = env.state().goal;
    episode.states.reserve(len + 1);
    episode.actions_raw.reserve(len);
    episode.states.push_back(env.state().current);
    for (int t = 0; t < len; ++t) {
      const Eigen::VectorXd raw = act(agent.actor(), r.observation, true, exploration, explore_rng);
      const auto t_decode = Clock::now();
      const Rotation a = decoder.decode(std::span<const double>(raw.data(), raw.size()));
      result.timing.decode_s += seconds_since(t_decode);
      r = env.step(a);
      episode.states.push_back(r.achieved);
      episode.actions_raw.emplace_back(raw.data(), raw.data() + raw.size());
    }
    steps += len;
    std::vector<RelabelEntry> entries = her_plan(episode, hp.her_k, her_rng, env_cfg);
    if (len == cfg.episode_len) buffer.add(std::move(episode), std::move(entries));
    result.timing.rollout_s += seconds_since(t_rollout);

    // Network updates.
    const auto t_train = Clock::now();
    if (buffer.episodes() > 0) {
      for (int u = 0; u < hp.updates_per_episode; ++u) {
        const Batch batch = buffer.sample(hp.batch_size, replay_rng, cfg.state_repr);
        agent.update(batch);
        agent.update_targets();
      }
    }
    result.timing.train_s += seconds_since(t_train);

    if (steps >= next_eval) {
      log_eval(steps);
      while (next_eval <= steps) next_eval += cfg.eval_every;
    }
  }
  if (result.metrics.empty() || result.metrics.back().env_step != steps) log_eval(steps);

  result.env_steps = steps;
  result.policy = snapshot();
  result.final_eval = evaluate(result.policy, cfg.env_config(stream_seed(seed, Stream::kFinalEval)),
                               cfg.final_eval_rollouts);
  result.degenerate_decodes = decoder.degenerate_count();
  result.timing.total_s = seconds_since(t_start);
  return result;
}

}  // namespace orient
