#include "orient/orientation_env.hpp"

#include <stdexcept>
#include <string>

namespace orient {

void EnvConfig::validate() const {
  if (episode_len < 1) throw std::invalid_argument("episode_len must be >= 1");
  if (!(max_angle > 0.0)) throw std::invalid_argument("max_angle must be positive");
  if (!(eps_orient > 0.0)) throw std::invalid_argument("eps_orient must be positive");
  if (!(eps_pos > 0.0)) throw std::invalid_argument("eps_pos must be positive");
}

double reward(const Rotation& s, const Rotation& g, const EnvConfig& cfg) {
  return geodesic_distance(s, g) <= cfg.eps_orient ? 0.0 : -1.0;
}

OrientationEnv::OrientationEnv(EnvConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

StepResult OrientationEnv::reset() {
  const UnitQuaternion current = sample_uniform(rng_);
  UnitQuaternion goal = sample_uniform(rng_);
  while (geodesic_distance(current, goal) <= cfg_.eps_orient) {
    goal = sample_uniform(rng_);
  }
  return reset_to(current, goal);
}

StepResult OrientationEnv::reset_to(const UnitQuaternion& current,
                                    const UnitQuaternion& goal) {
  check_valid(current);
  check_valid(goal);
  state_ = {current, goal, 0};
  succeeded_ = false;
  return observe();
}

bool OrientationEnv::episode_over() const {
  return state_.step_count >= cfg_.episode_len ||
         (cfg_.terminate_on_success && succeeded_);
}

StepResult OrientationEnv::step(const Rotation& action) {
  if (episode_over()) throw std::logic_error("step called on a finished episode");
  const UnitQuaternion a = to_quaternion(action);
  const double angle = geodesic_distance(UnitQuaternion::identity(), a);
  if (angle > cfg_.max_angle + 1e-9) {
    throw std::invalid_argument("action angle " + std::to_string(angle) +
                                " exceeds max_angle");
  }
  // Renormalize every step so drift never accumulates.
  state_.current = (state_.current * a).normalized();
  ++state_.step_count;
  StepResult r = observe();
  succeeded_ = succeeded_ || r.success;
  return r;
}

StepResult OrientationEnv::observe() const {
  StepResult r;
  r.observation = encode_observation(state_.current, state_.goal, cfg_.state_repr);
  r.reward = reward(state_.current, state_.goal, cfg_);
  r.success = r.reward == 0.0;
  r.done = r.success || state_.step_count >= cfg_.episode_len;
  r.achieved = state_.current;
  return r;
}

TangentVector greedy_action(const UnitQuaternion& current, const UnitQuaternion& goal,
                            double max_angle) {
  return clamp_angle(boxminus(goal, current), max_angle);
}

}  // namespace orient
