#pragma once

// DDPG actor-critic with hindsight experience replay ("future" strategy).

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "orient/neural_net.hpp"
#include "orient/orientation_env.hpp"
#include "orient/repr_codec.hpp"

namespace orient {

struct Hyperparams {
  double gamma = 0.98;
  double soft_update_rate = 0.005;
  int batch_size = 256;
  int buffer_episodes = 10000;
  double noise_sigma = 0.2;
  double random_action_prob = 0.3;
  int her_k = 4;
  int updates_per_episode = 40;
  std::vector<int> hidden = {256, 256};
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double actor_final_scale = 1e-3;

  void validate() const;
  // Lower clip of the critic target, -1 / (1 - gamma).
  double q_floor() const { return -1.0 / (1.0 - gamma); }
};

struct Transition {
  std::vector<double> observation;
  std::vector<double> action_raw;
  double reward = -1.0;
  std::vector<double> next_observation;
  UnitQuaternion goal;
  UnitQuaternion achieved_next;
  bool done = false;
  int step = 0;
  // Episode step whose achieved goal replaced the original; -1 if original.
  int goal_source = -1;
};

/// One episode: states s_0..s_T, the goal and the T raw actions.
struct EpisodeRecord {
  UnitQuaternion goal;
  std::vector<UnitQuaternion> states;
  std::vector<std::vector<double>> actions_raw;

  int length() const { return static_cast<int>(actions_raw.size()); }
  // Achieved goal after step t, i.e. s_{t+1}.
  const UnitQuaternion& achieved(int t) const { return states[t + 1]; }
};

/// A (possibly relabeled) transition stored by reference into its episode.
struct RelabelEntry {
  int step = 0;
  int goal_source = -1;
  double reward = -1.0;
};

// Original transitions plus k relabeled copies per step, each taking the
// achieved goal of a uniformly drawn step j >= t of the same episode.
std::vector<RelabelEntry> her_plan(const EpisodeRecord& episode, int k, Rng& rng,
                                   const EnvConfig& env);
Transition materialize(const EpisodeRecord& episode, const RelabelEntry& entry,
                       Repr state_repr);
std::vector<Transition> her_relabel(const EpisodeRecord& episode, int k, Rng& rng,
                                    const EnvConfig& env);

/// Column-major training batch.
struct Batch {
  Eigen::MatrixXd observation;
  Eigen::MatrixXd action;
  Eigen::VectorXd reward;
  Eigen::MatrixXd next_observation;

  int size() const { return static_cast<int>(reward.size()); }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity_episodes);

  void add(EpisodeRecord episode, std::vector<RelabelEntry> entries);

  int episodes() const { return static_cast<int>(slots_.size()); }
  std::size_t transitions() const { return transitions_; }
  int capacity() const { return capacity_; }

  struct Index {
    int slot = 0;
    int entry = 0;
  };
  // Uniform over all stored entries.
  Index sample_index(Rng& rng) const;
  Transition transition(const Index& idx, Repr state_repr) const;
  Batch sample(int n, Rng& rng, Repr state_repr) const;

 private:
  struct Slot {
    EpisodeRecord episode;
    std::vector<RelabelEntry> entries;
  };

  int capacity_;
  int next_ = 0;
  std::size_t transitions_ = 0;
  std::vector<Slot> slots_;
};

/// A frozen actor with the representations it was trained for.
struct TrainedPolicy {
  DenseNet actor;
  Repr state_repr = Repr::kLieAlgebra;
  ActionSpec action;

  void save(std::ostream& out) const;
  static TrainedPolicy load(std::istream& in);
};

struct ExplorationConfig {
  double noise_sigma = 0.0;
  double random_action_prob = 0.0;
};

// Deterministic tanh output, optionally perturbed by clipped Gaussian noise and
// replaced by a uniform draw with probability random_action_prob.
Eigen::VectorXd act(const DenseNet& actor, std::span<const double> observation,
                    bool explore, const ExplorationConfig& exploration, Rng& rng);

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double target_min = 0.0;
  double target_max = 0.0;
};

class DdpgAgent {
 public:
  DdpgAgent(int observation_dim, int action_dim, const Hyperparams& hp, Rng& init_rng);

  // One critic and one actor Adam step on `batch`. Does not touch targets.
  UpdateStats update(const Batch& batch);
  void update_targets();

  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }
  const DenseNet& actor_target() const { return actor_target_; }
  const DenseNet& critic_target() const { return critic_target_; }
  const Hyperparams& hyperparams() const { return hp_; }

  // Critic targets r + gamma * Q'(s', pi'(s')), clipped to [q_floor, 0].
  Eigen::VectorXd critic_targets(const Batch& batch) const;

 private:
  Hyperparams hp_;
  DenseNet actor_;
  DenseNet critic_;
  DenseNet actor_target_;
  DenseNet critic_target_;
  AdamState actor_opt_;
  AdamState critic_opt_;
};

}  // namespace orient
