#pragma once

// Goal-conditioned orientation task: rotate a frame onto a goal frame using
// bounded relative rotations. Sparse reward in {-1, 0}.

#include <cstdint>
#include <vector>

#include "orient/repr_codec.hpp"
#include "orient/rotation.hpp"

namespace orient {

struct EnvConfig {
  int episode_len = 50;
  double max_angle = kDefaultMaxAngle;
  double eps_orient = 0.1;  // rad
  double eps_pos = 0.05;    // m; no position in this task
  bool terminate_on_success = false;
  Repr state_repr = Repr::kLieAlgebra;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EnvState {
  UnitQuaternion current;
  UnitQuaternion goal;
  int step_count = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = -1.0;
  bool success = false;
  bool done = false;
  UnitQuaternion achieved;
};

double reward(const Rotation& s, const Rotation& g, const EnvConfig& cfg);

class OrientationEnv {
 public:
  explicit OrientationEnv(EnvConfig cfg);

  // Draws a fresh (current, goal) pair from the environment's seed stream.
  StepResult reset();
  // Starts an episode from a given pair (used by tests and scripted oracles).
  StepResult reset_to(const UnitQuaternion& current, const UnitQuaternion& goal);

  // current <- current * action. Throws std::logic_error once the episode
  // is over and std::invalid_argument for an over-sized action.
  StepResult step(const Rotation& action);

  Rotation achieved_goal() const { return state_.current; }
  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  bool episode_over() const;

 private:
  StepResult observe() const;

  EnvConfig cfg_;
  Rng rng_;
  EnvState state_;
  bool succeeded_ = false;
};

// Scripted controller: the clamped tangent-space residual toward the goal.
TangentVector greedy_action(const UnitQuaternion& current, const UnitQuaternion& goal,
                            double max_angle);

}  // namespace orient
