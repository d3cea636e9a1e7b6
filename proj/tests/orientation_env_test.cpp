#include "orient/orientation_env.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace orient {
namespace {

TEST(RewardTest, ClosedThreshold) {
  EnvConfig cfg;
  const UnitQuaternion s = UnitQuaternion::identity();
  EXPECT_EQ(reward(s, s, cfg), 0.0);
  EXPECT_EQ(reward(s, exp(TangentVector(0.0999, 0, 0)), cfg), 0.0);
  EXPECT_EQ(reward(s, exp(TangentVector(0, 0.1001, 0)), cfg), -1.0);
  // Double cover: -q is the same orientation.
  EXPECT_EQ(reward(s, -s, cfg), 0.0);
}

TEST(RewardTest, AgreesWithTraceOracle) {
  Rng rng(1);
  EnvConfig cfg;
  cfg.eps_orient = 0.5;
  for (int i = 0; i < 5000; ++i) {
    const UnitQuaternion s = sample_uniform(rng);
    const UnitQuaternion g = exp(testing::random_tangent(rng, 1.0)) * s;
    const double angle = testing::trace_angle(to_matrix(s), to_matrix(g));
    if (std::abs(angle - cfg.eps_orient) < 1e-6) continue;
    EXPECT_EQ(reward(s, g, cfg), angle <= cfg.eps_orient ? 0.0 : -1.0);
  }
}

TEST(EnvConfigTest, Validation) {
  EnvConfig cfg;
  cfg.episode_len = 0;
  EXPECT_THROW(OrientationEnv{cfg}, std::invalid_argument);
  cfg = {};
  cfg.max_angle = -1.0;
  EXPECT_THROW(OrientationEnv{cfg}, std::invalid_argument);
  cfg = {};
  cfg.eps_orient = 0.0;
  EXPECT_THROW(OrientationEnv{cfg}, std::invalid_argument);
}

TEST(OrientationEnvTest, ResetIsSeededAndNeverStartsSolved) {
  EnvConfig cfg;
  cfg.seed = 42;
  cfg.eps_orient = 1.0;
  OrientationEnv a(cfg), b(cfg);
  for (int i = 0; i < 500; ++i) {
    const StepResult ra = a.reset();
    const StepResult rb = b.reset();
    EXPECT_EQ(ra.observation, rb.observation);
    EXPECT_GT(geodesic_distance(a.state().current, a.state().goal), cfg.eps_orient);
    EXPECT_EQ(ra.reward, -1.0);
    EXPECT_EQ(a.state().step_count, 0);
  }
}

TEST(OrientationEnvTest, StepComposesOnTheRight) {
  EnvConfig cfg;
  OrientationEnv env(cfg);
  Rng rng(2);
  const UnitQuaternion s = sample_uniform(rng);
  const UnitQuaternion g = sample_uniform(rng);
  env.reset_to(s, g);
  const TangentVector a(0.1, -0.05, 0.2);
  const StepResult r = env.step(a);
  const Eigen::Matrix3d expected = to_matrix(s) * testing::rodrigues(a.v);
  EXPECT_LT((to_matrix(env.state().current) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(env.state().step_count, 1);
  EXPECT_EQ(r.observation, encode_observation(env.state().current, g, cfg.state_repr));
  EXPECT_LT(geodesic_distance(r.achieved, env.state().current), 1e-15);
}

TEST(OrientationEnvTest, AcceptsActionsInAnyRepresentation) {
  EnvConfig cfg;
  Rng rng(3);
  for (Repr repr : kAllReprs) {
    OrientationEnv env(cfg);
    const UnitQuaternion s = sample_uniform(rng);
    env.reset_to(s, sample_uniform(rng));
    const TangentVector a(0.0, 0.2, 0.1);
    env.step(convert(Rotation(exp(a)), repr));
    EXPECT_LT(geodesic_distance(env.state().current, s * exp(a)), 1e-12) << to_string(repr);
  }
}

TEST(OrientationEnvTest, RejectsOversizedAction) {
  OrientationEnv env(EnvConfig{});
  env.reset();
  EXPECT_THROW(env.step(TangentVector(0.1 * kPi + 1e-6, 0, 0)), std::invalid_argument);
  EXPECT_NO_THROW(env.step(TangentVector(0.1 * kPi, 0, 0)));
}

TEST(OrientationEnvTest, EpisodeEndsAfterFixedLength) {
  EnvConfig cfg;
  cfg.episode_len = 5;
  OrientationEnv env(cfg);
  env.reset_to(UnitQuaternion::identity(), UnitQuaternion::identity());
  for (int t = 0; t < 5; ++t) {
    EXPECT_FALSE(env.episode_over());
    const StepResult r = env.step(TangentVector());
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.reward, 0.0);
  }
  EXPECT_TRUE(env.episode_over());
  EXPECT_THROW(env.step(TangentVector()), std::logic_error);
}

TEST(OrientationEnvTest, OptionalTerminationOnSuccess) {
  EnvConfig cfg;
  cfg.terminate_on_success = true;
  OrientationEnv env(cfg);
  env.reset_to(UnitQuaternion::identity(), exp(TangentVector(0.2, 0, 0)));
  EXPECT_FALSE(env.step(TangentVector(0.05, 0, 0)).success);
  EXPECT_FALSE(env.episode_over());
  EXPECT_TRUE(env.step(TangentVector(0.1, 0, 0)).success);
  EXPECT_TRUE(env.episode_over());
}

TEST(OrientationEnvTest, StateStaysNormalized) {
  EnvConfig cfg;
  cfg.episode_len = 100000;
  OrientationEnv env(cfg);
  env.reset();
  Rng rng(4);
  for (int i = 0; i < 100000; ++i) env.step(testing::random_tangent(rng, cfg.max_angle));
  EXPECT_NEAR(env.state().current.norm(), 1.0, 1e-15);
}

TEST(GreedyActionTest, ReachesGoalWithinAngleOverStepBound) {
  EnvConfig cfg;
  cfg.seed = 5;
  OrientationEnv env(cfg);
  for (int i = 0; i < 2000; ++i) {
    env.reset();
    const double d0 = geodesic_distance(env.state().current, env.state().goal);
    const int bound = static_cast<int>(std::ceil((d0 - cfg.eps_orient) / cfg.max_angle));
    int steps = 0;
    bool success = false;
    while (!success && steps < 10) {
      success = env.step(greedy_action(env.state().current, env.state().goal, cfg.max_angle)).success;
      ++steps;
    }
    EXPECT_TRUE(success);
    EXPECT_LE(steps, std::max(bound, 1));
  }
}

}  // namespace
}  // namespace orient
