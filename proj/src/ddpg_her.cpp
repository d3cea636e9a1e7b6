#include "orient/ddpg_her.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace orient {

void Hyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(soft_update_rate > 0.0 && soft_update_rate <= 1.0)) {
    throw std::invalid_argument("soft_update_rate must be in (0, 1]");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (buffer_episodes < 1) throw std::invalid_argument("buffer_episodes must be positive");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
  if (!(random_action_prob >= 0.0 && random_action_prob <= 1.0)) {
    throw std::invalid_argument("random_action_prob must be in [0, 1]");
  }
  if (her_k < 0) throw std::invalid_argument("her_k must be non-negative");
  if (updates_per_episode < 0) throw std::invalid_argument("updates_per_episode must be >= 0");
  if (hidden.empty()) throw std::invalid_argument("at least one hidden layer is required");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be positive");
  }
  if (actor_lr < 0.0 || critic_lr < 0.0) throw std::invalid_argument("learning rates must be >= 0");
}

std::vector<RelabelEntry> her_plan(const EpisodeRecord& episode, int k, Rng& rng,
                                   const EnvConfig& env) {
  const int n = episode.length();
  std::vector<RelabelEntry> entries;
  entries.reserve(static_cast<std::size_t>(n) * (k + 1));
  for (int t = 0; t < n; ++t) {
    const Rotation achieved = episode.achieved(t);
    entries.push_back({t, -1, reward(achieved, episode.goal, env)});
    std::uniform_int_distribution<int> future(t, n - 1);
    for (int i = 0; i < k; ++i) {
      const int j = future(rng);
      entries.push_back({t, j, reward(achieved, episode.achieved(j), env)});
    }
  }
  return entries;
}

Transition materialize(const EpisodeRecord& episode, const RelabelEntry& entry,
                       Repr state_repr) {
  const int t = entry.step;
  Transition tr;
  tr.goal = entry.goal_source < 0 ? episode.goal : episode.achieved(entry.goal_source);
  tr.achieved_next = episode.achieved(t);
  tr.observation = encode_observation(episode.states[t], tr.goal, state_repr);
  tr.next_observation = encode_observation(tr.achieved_next, tr.goal, state_repr);
  tr.action_raw = episode.actions_raw[t];
  tr.reward = entry.reward;
  tr.done = entry.reward == 0.0;
  tr.step = t;
  tr.goal_source = entry.goal_source;
  return tr;
}

std::vector<Transition> her_relabel(const EpisodeRecord& episode, int k, Rng& rng,
                                    const EnvConfig& env) {
  std::vector<Transition> out;
  for (const RelabelEntry& e : her_plan(episode, k, rng, env)) {
    out.push_back(materialize(episode, e, env.state_repr));
  }
  return out;
}

ReplayBuffer::ReplayBuffer(int capacity_episodes) : capacity_(capacity_episodes) {
  if (capacity_ < 1) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::add(EpisodeRecord episode, std::vector<RelabelEntry> entries) {
  if (entries.empty()) return;
  if (!slots_.empty() && entries.size() != slots_.front().entries.size()) {
    // Uniform two-level sampling relies on equal-sized slots.
    throw std::invalid_argument("replay buffer episodes must have equal transition counts");
  }
  Slot slot{std::move(episode), std::move(entries)};
  if (static_cast<int>(slots_.size()) < capacity_) {
    transitions_ += slot.entries.size();
    slots_.push_back(std::move(slot));
  } else {
    slots_[next_] = std::move(slot);
  }
  next_ = (next_ + 1) % capacity_;
}

ReplayBuffer::Index ReplayBuffer::sample_index(Rng& rng) const {
  if (slots_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::uniform_int_distribution<int> slot(0, static_cast<int>(slots_.size()) - 1);
  const int s = slot(rng);
  std::uniform_int_distribution<int> entry(0, static_cast<int>(slots_[s].entries.size()) - 1);
  return {s, entry(rng)};
}

Transition ReplayBuffer::transition(const Index& idx, Repr state_repr) const {
  const Slot& s = slots_.at(idx.slot);
  return materialize(s.episode, s.entries.at(idx.entry), state_repr);
}

Batch ReplayBuffer::sample(int n, Rng& rng, Repr state_repr) const {
  if (slots_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  const int obs = static_cast<int>(2 * obs_dim(state_repr));
  const int act = static_cast<int>(slots_.front().episode.actions_raw.front().size());
  Batch b{Eigen::MatrixXd(obs, n), Eigen::MatrixXd(act, n), Eigen::VectorXd(n),
          Eigen::MatrixXd(obs, n)};
  for (int i = 0; i < n; ++i) {
    const Index idx = sample_index(rng);
    const Slot& s = slots_[idx.slot];
    const RelabelEntry& e = s.entries[idx.entry];
    const UnitQuaternion& goal =
        e.goal_source < 0 ? s.episode.goal : s.episode.achieved(e.goal_source);
    encode_observation(s.episode.states[e.step], goal, state_repr,
                       std::span<double>(b.observation.col(i).data(), obs));
    encode_observation(s.episode.achieved(e.step), goal, state_repr,
                       std::span<double>(b.next_observation.col(i).data(), obs));
    const auto& a = s.episode.actions_raw[e.step];
    for (int j = 0; j < act; ++j) b.action(j, i) = a[j];
    b.reward(i) = e.reward;
  }
  return b;
}

void TrainedPolicy::save(std::ostream& out) const {
  std::ostringstream s;
  s << std::hexfloat;
  s << "orient-policy 1\n";
  s << "state_repr " << to_string(state_repr) << '\n';
  s << "action_repr " << to_string(action.repr) << '\n';
  s << "max_angle " << action.max_angle << '\n';
  out << s.str();
  actor.save(out);
}

TrainedPolicy TrainedPolicy::load(std::istream& in) {
  auto expect = [&](const std::string& key) {
    std::string tok;
    if (!(in >> tok) || tok != key) {
      throw std::runtime_error("policy checkpoint: expected '" + key + "'");
    }
    std::string value;
    if (!(in >> value)) throw std::runtime_error("policy checkpoint: missing value for " + key);
    return value;
  };
  if (expect("orient-policy") != "1") {
    throw std::runtime_error("policy checkpoint: unsupported version");
  }
  TrainedPolicy p;
  p.state_repr = parse_repr(expect("state_repr"));
  p.action.repr = parse_repr(expect("action_repr"));
  p.action.max_angle = std::strtod(expect("max_angle").c_str(), nullptr);
  p.actor = DenseNet::load(in);
  if (p.actor.output_dim() != static_cast<int>(action_dim(p.action.repr)) ||
      p.actor.input_dim() != static_cast<int>(2 * obs_dim(p.state_repr))) {
    throw std::runtime_error("policy checkpoint: actor shape does not match representations");
  }
  return p;
}

Eigen::VectorXd act(const DenseNet& actor, std::span<const double> observation,
                    bool explore, const ExplorationConfig& exploration, Rng& rng) {
  const Eigen::Map<const Eigen::VectorXd> obs(observation.data(),
                                              static_cast<Eigen::Index>(observation.size()));
  Eigen::VectorXd a = actor.forward(Eigen::VectorXd(obs));
  if (!explore) return a;
  if (exploration.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, exploration.noise_sigma);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = std::clamp(a(i) + noise(rng), -1.0, 1.0);
    }
  }
  if (exploration.random_action_prob > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < exploration.random_action_prob) {
      std::uniform_real_distribution<double> box(-1.0, 1.0);
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = box(rng);
    }
  }
  return a;
}

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

}  // namespace

DdpgAgent::DdpgAgent(int observation_dim, int action_dim, const Hyperparams& hp,
                     Rng& init_rng)
    : hp_(hp) {
  hp_.validate();
  actor_ = DenseNet::random(layer_sizes(observation_dim, hp_.hidden, action_dim),
                            Head::kTanh, init_rng, hp_.actor_final_scale);
  critic_ = DenseNet::random(
      layer_sizes(observation_dim + action_dim, hp_.hidden, 1), Head::kIdentity, init_rng);
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_opt_ = AdamState::for_net(actor_, {hp_.actor_lr});
  critic_opt_ = AdamState::for_net(critic_, {hp_.critic_lr});
}

Eigen::VectorXd DdpgAgent::critic_targets(const Batch& batch) const {
  const Eigen::MatrixXd next_action = actor_target_.forward(batch.next_observation);
  const Eigen::MatrixXd next_q =
      critic_target_.forward(stack(batch.next_observation, next_action));
  Eigen::VectorXd y = batch.reward + hp_.gamma * next_q.row(0).transpose();
  return y.cwiseMax(hp_.q_floor()).cwiseMin(0.0);
}

UpdateStats DdpgAgent::update(const Batch& batch) {
  const int n = batch.size();
  const double inv_n = 1.0 / n;
  UpdateStats stats;

  const Eigen::VectorXd y = critic_targets(batch);
  stats.target_min = y.minCoeff();
  stats.target_max = y.maxCoeff();
  if (stats.target_min < hp_.q_floor() || stats.target_max > 0.0) {
    throw std::logic_error("critic target escaped its clip range");
  }

  DenseNet::Tape critic_tape;
  const Eigen::MatrixXd q =
      critic_.forward(stack(batch.observation, batch.action), critic_tape);
  const Eigen::RowVectorXd err = q.row(0) - y.transpose();
  stats.critic_loss = err.squaredNorm() * inv_n;
  const Gradient critic_grad = critic_.backward(critic_tape, 2.0 * inv_n * err);

  // Deterministic policy gradient through the critic's action input.
  DenseNet::Tape actor_tape;
  const Eigen::MatrixXd pi = actor_.forward(batch.observation, actor_tape);
  DenseNet::Tape q_tape;
  const Eigen::MatrixXd q_pi = critic_.forward(stack(batch.observation, pi), q_tape);
  stats.actor_loss = -q_pi.mean();
  const Gradient through_critic =
      critic_.backward(q_tape, Eigen::MatrixXd::Constant(1, n, -inv_n));
  const Gradient actor_grad =
      actor_.backward(actor_tape, through_critic.input.bottomRows(pi.rows()));

  if (!std::isfinite(stats.critic_loss) || !std::isfinite(stats.actor_loss)) {
    throw DivergenceError("non-finite loss (critic " + std::to_string(stats.critic_loss) +
                          ", actor " + std::to_string(stats.actor_loss) + ")");
  }
  adam_step(critic_, critic_grad, critic_opt_);
  adam_step(actor_, actor_grad, actor_opt_);
  return stats;
}

void DdpgAgent::update_targets() {
  soft_update(actor_target_, actor_, hp_.soft_update_rate);
  soft_update(critic_target_, critic_, hp_.soft_update_rate);
}

}  // namespace orient
