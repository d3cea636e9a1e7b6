// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//
//   acceptance [--config desk.cfg] [--out dir] [--only 1,2,...]
//
// Criteria 8 and 9 train 5 seeds each of lie-algebra/lie-algebra and
// lie-algebra/euler with the given config (the desk profile by default).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/LU>

#include "grad_check.hpp"
#include "orient/experiment.hpp"
#include "test_util.hpp"

namespace {

using namespace orient;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool outside_gimbal_band(const Rotation& x) {
  return std::abs(to_euler(to_quaternion(x)).pitch) <= kPi / 2 - 0.1;
}

Outcome exp_log_roundtrip() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const TangentVector tau = testing::random_tangent(rng, kPi - 1e-3);
    worst = std::max(worst, (log(exp(tau)).v - tau.v).cwiseAbs().maxCoeff());
  }
  const double dt = seconds_since(t0);
  return {worst < 1e-9 && dt < 10.0,
          format("1e5 tangents, max inf-norm error %.3g (< 1e-9), %.2f s (< 10 s)", worst, dt)};
}

Outcome group_axioms() {
  Rng rng(102);
  double group = 0.0, metric = 0.0;
  for (Repr r : kAllReprs) {
    const Rotation e = Rotation::identity(r);
    for (int i = 0; i < 10000; ++i) {
      const Rotation x = testing::random_rotation(rng, r);
      const Rotation y = testing::random_rotation(rng, r);
      const Rotation z = testing::random_rotation(rng, r);
      group = std::max({group, geodesic_distance(compose(compose(x, y), z), compose(x, compose(y, z))),
                        geodesic_distance(compose(e, x), x), geodesic_distance(compose(x, e), x),
                        geodesic_distance(compose(x, inverse(x)), e),
                        geodesic_distance(compose(inverse(x), x), e)});
      const double dxy = geodesic_distance(x, y);
      metric = std::max({metric, std::abs(dxy - geodesic_distance(y, x)),
                         geodesic_distance(x, z) - dxy - geodesic_distance(y, z),
                         geodesic_distance(x, x)});
    }
  }
  return {group <= 1e-12 && metric <= 1e-9,
          format("6 reprs x 1e4 triples, group residual %.3g (<= 1e-12), metric residual %.3g (<= 1e-9)",
                 group, metric)};
}

Outcome cross_representation() {
  Rng rng(103);
  double worst = 0.0;
  int pairs = 0;
  for (Repr from : kAllReprs) {
    for (Repr to : kAllReprs) {
      if (from == to) continue;
      ++pairs;
      const bool euler = from == Repr::kEuler || to == Repr::kEuler;
      for (int n = 0; n < 1000;) {
        const Rotation x = testing::random_rotation(rng, from);
        const Rotation y = testing::random_rotation(rng, from);
        if (euler && !(outside_gimbal_band(x) && outside_gimbal_band(y))) continue;
        ++n;
        const Rotation xb = convert(x, to), yb = convert(y, to);
        worst = std::max({worst, std::abs(geodesic_distance(x, y) - geodesic_distance(xb, yb)),
                          geodesic_distance(x, xb)});
      }
    }
  }
  return {pairs == 30 && worst <= 1e-9,
          format("%d ordered pairs x 1e3 samples, max distance change %.3g (<= 1e-9)", pairs, worst)};
}

Outcome projection() {
  Rng rng(104);
  std::normal_distribution<double> noise(0.0, 0.05);
  const double step = 0.01;
  double worst_excess = -std::numeric_limits<double>::infinity();
  double worst_gap = 0.0, worst_orth = 0.0;
  for (int c = 0; c < 10; ++c) {
    const Eigen::Matrix3d r = to_matrix(sample_uniform(rng));
    Eigen::Matrix3d m = r;
    for (int i = 0; i < 9; ++i) m(i) += noise(rng);
    const Eigen::Matrix3d p = project_to_so3(m).rotation.m;
    worst_orth = std::max({worst_orth, (p.transpose() * p - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
                           std::abs(p.determinant() - 1.0)});
    // Brute force over r * Exp(d), d on a grid in [-0.25, 0.25]^3.
    double best = std::numeric_limits<double>::infinity();
    Eigen::Matrix3d best_r;
    for (int i = -25; i <= 25; ++i)
      for (int j = -25; j <= 25; ++j)
        for (int k = -25; k <= 25; ++k) {
          const Eigen::Matrix3d cand = r * testing::rodrigues(Eigen::Vector3d(i, j, k) * step);
          const double f = (cand - m).norm();
          if (f < best) {
            best = f;
            best_r = cand;
          }
        }
    worst_excess = std::max(worst_excess, (p - m).norm() - best);
    worst_gap = std::max(worst_gap, testing::trace_angle(p, best_r));
  }
  const double resolution = step * std::sqrt(3.0);
  return {worst_excess <= 1e-12 && worst_gap <= resolution && worst_orth <= 1e-9,
          format("10 cases: ||P-M|| - grid best max %.3g (<= 0), angle to grid best %.3g (<= %.3g), "
                 "orthonormality %.3g (<= 1e-9)",
                 worst_excess, worst_gap, resolution, worst_orth)};
}

Outcome uniform_sampling() {
  const double closed_form = kPi / 2 + 2 / kPi;
  const int n = 1000000;
  const auto t0 = Clock::now();
  Rng rng(105);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += geodesic_distance(UnitQuaternion::identity(), sample_uniform(rng));
  const double dt = seconds_since(t0);
  const double mean = sum / n;
  // Independent oracle for the closed form: uniform axis-angle density
  // (1 - cos t) / pi by rejection sampling, no quaternions involved.
  Rng orng(106);
  std::uniform_real_distribution<double> ut(0.0, kPi), uy(0.0, 2.0 / kPi);
  double osum = 0.0;
  for (int i = 0; i < n;) {
    const double t = ut(orng);
    if (uy(orng) <= (1 - std::cos(t)) / kPi) {
      osum += t;
      ++i;
    }
  }
  const double oracle = osum / n;
  return {std::abs(mean - closed_form) < 0.01 && std::abs(oracle - closed_form) < 0.01 && dt < 30.0,
          format("1e6 draws: mean angle %.5f, closed form %.5f, oracle %.5f (tol 0.01), %.2f s (< 30 s)",
                 mean, closed_form, oracle, dt)};
}

Outcome gradient_check(const ExperimentConfig& cfg) {
  Rng rng(107);
  double worst = 0.0;
  std::set<std::vector<int>> shapes;
  for (Repr s : kAllReprs) {
    for (Repr a : kAllReprs) {
      const int obs = static_cast<int>(2 * obs_dim(s));
      const int act = static_cast<int>(action_dim(a));
      std::vector<int> actor{obs}, critic{obs + act};
      for (int h : cfg.hp.hidden) {
        actor.push_back(h);
        critic.push_back(h);
      }
      actor.push_back(act);
      critic.push_back(1);
      for (auto [sizes, head] : {std::pair{actor, Head::kTanh}, std::pair{critic, Head::kIdentity}}) {
        std::vector<int> key = sizes;
        key.push_back(static_cast<int>(head));
        if (!shapes.insert(key).second) continue;
        const DenseNet net = DenseNet::random(sizes, head, rng);
        worst = std::max(worst, testing::gradient_check(net, 4, rng));
      }
    }
  }
  return {worst < 1e-5, format("%zu distinct actor/critic shapes, max relative error %.3g (< 1e-5)",
                               shapes.size(), worst)};
}

Outcome scripted_policy() {
  EnvConfig env;
  env.seed = 108;
  OrientationEnv e(env);
  int solved = 0, worst_steps = 0;
  for (int i = 0; i < 10000; ++i) {
    e.reset();
    for (int t = 1; t <= 10; ++t) {
      if (e.step(greedy_action(e.state().current, e.state().goal, env.max_angle)).success) {
        ++solved;
        worst_steps = std::max(worst_steps, t);
        break;
      }
    }
  }
  return {solved == 10000,
          format("greedy controller solved %d/10000 within 10 steps (slowest %d)", solved, worst_steps)};
}

struct TrainingRuns {
  bool done = false;
  ExperimentOutputs lie;
  ExperimentOutputs euler;
  double seconds = 0.0;
};

void ensure_training(TrainingRuns& runs, const ExperimentConfig& base) {
  if (runs.done) return;
  const auto t0 = Clock::now();
  ExperimentConfig cfg = base;
  cfg.state_repr = Repr::kLieAlgebra;
  cfg.action_repr = Repr::kLieAlgebra;
  runs.lie = run_experiment(cfg, worker_count());
  cfg.action_repr = Repr::kEuler;
  runs.euler = run_experiment(cfg, worker_count());
  runs.seconds = seconds_since(t0);
  runs.done = true;
}

std::string per_seed(const SummaryRecord& s, double SeedSummary::*field) {
  std::string out;
  for (const SeedSummary& r : s.runs) out += format("%s%.3f", out.empty() ? "" : " ", r.*field);
  return out;
}

Outcome learning_smoke(TrainingRuns& runs, const ExperimentConfig& cfg) {
  ensure_training(runs, cfg);
  const SummaryRecord& s = runs.lie.summary;
  return {s.final_success_rate.mean >= 0.9,
          format("lie-algebra/lie-algebra, %zu seeds x %ld steps: final success %.3f +- %.3f (>= 0.9) "
                 "[%s]",
                 s.runs.size(), cfg.total_steps, s.final_success_rate.mean,
                 s.final_success_rate.stderr_, per_seed(s, &SeedSummary::final_success_rate).c_str())};
}

Outcome directional_representation(TrainingRuns& runs, const ExperimentConfig& cfg) {
  ensure_training(runs, cfg);
  const SummaryRecord& lie = runs.lie.summary;
  const SummaryRecord& eul = runs.euler.summary;
  const double gap = lie.avg_training_success.mean - eul.avg_training_success.mean;
  return {gap >= 0.05,
          format("avg training success lie-algebra %.3f [%s] vs euler %.3f [%s], gap %.3f (>= 0.05)",
                 lie.avg_training_success.mean,
                 per_seed(lie, &SeedSummary::avg_training_success).c_str(),
                 eul.avg_training_success.mean,
                 per_seed(eul, &SeedSummary::avg_training_success).c_str(), gap)};
}

Outcome directional_timing(const ExperimentConfig& cfg) {
  const std::vector<TimingEntry> entries = bench_timing(cfg, 15);
  std::string detail;
  const TimingEntry* best = &entries.front();
  for (const TimingEntry& e : entries) {
    detail += format("%s%s=%.2fs", detail.empty() ? "" : " ", std::string(to_string(e.repr)).c_str(),
                     e.total());
    if (e.total() < best->total()) best = &e;
  }
  return {best->repr == Repr::kLieAlgebra,
          "decode+update per full run: " + detail + "; lowest " + std::string(to_string(best->repr))};
}

Outcome her_correctness() {
  EnvConfig env;
  env.seed = 111;
  env.eps_orient = 0.3;
  OrientationEnv e(env);
  Rng explore(112), her(113);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ReplayBuffer buffer(200);
  std::vector<EpisodeRecord> episodes;
  for (Repr action : kAllReprs) {
    const ActionSpec spec{action, env.max_angle};
    for (int ep = 0; ep < 30; ++ep) {
      e.reset();
      EpisodeRecord rec;
      rec.goal = e.state().goal;
      rec.states.push_back(e.state().current);
      while (!e.episode_over()) {
        std::vector<double> raw(spec.raw_dim());
        for (double& x : raw) x = u(explore);
        rec.states.push_back(e.step(decode_action(raw, spec).action).achieved);
        rec.actions_raw.push_back(raw);
      }
      auto entries = her_plan(rec, 4, her, env);
      episodes.push_back(rec);
      buffer.add(std::move(rec), std::move(entries));
    }
  }
  long checked = 0, relabeled = 0, successes = 0, bad_reward = 0, bad_source = 0;
  const int per_episode = env.episode_len * 5;
  for (int slot = 0; slot < buffer.episodes(); ++slot) {
    const EpisodeRecord& rec = episodes[slot];
    for (int i = 0; i < per_episode; ++i) {
      const Transition tr = buffer.transition({slot, i}, Repr::kLieAlgebra);
      const Eigen::Matrix3d achieved = to_matrix(rec.states[tr.step + 1]);
      const UnitQuaternion& goal =
          tr.goal_source < 0 ? rec.goal : rec.states.at(tr.goal_source + 1);
      const double brute =
          testing::trace_angle(achieved, to_matrix(goal)) <= env.eps_orient ? 0.0 : -1.0;
      bad_reward += brute != tr.reward;
      if (tr.goal_source >= 0) {
        ++relabeled;
        successes += tr.reward == 0.0;
        const bool future = tr.goal_source >= tr.step && tr.goal_source < rec.length();
        const UnitQuaternion& g = rec.states[tr.goal_source + 1];
        const bool same = tr.goal.w == g.w && tr.goal.x == g.x && tr.goal.y == g.y && tr.goal.z == g.z;
        bad_source += !future || !same;
      }
      ++checked;
    }
  }
  return {bad_reward == 0 && bad_source == 0 && relabeled > 0,
          format("%ld transitions (%ld relabeled, %ld relabeled successes): %ld reward mismatches, "
                 "%ld non-future goals",
                 checked, relabeled, successes, bad_reward, bad_source)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string config_file = ORIENT_DESK_CONFIG;
  std::string out_dir = "acceptance_results";
  std::vector<int> only;
  app.add_option("--config", config_file, "training config for criteria 6, 8, 9, 10");
  app.add_option("--out", out_dir, "directory for training artifacts");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  std::ifstream in(config_file);
  if (!in) {
    std::fprintf(stderr, "cannot open %s\n", config_file.c_str());
    return 2;
  }
  apply_config_file(cfg, in);
  cfg.out_dir = out_dir;

  TrainingRuns runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exp/log roundtrip", exp_log_roundtrip},
      {"group and metric axioms", group_axioms},
      {"cross-representation consistency", cross_representation},
      {"projection to SO(3)", projection},
      {"uniform sampling", uniform_sampling},
      {"gradient check", [&] { return gradient_check(cfg); }},
      {"scripted-policy oracle", scripted_policy},
      {"learning smoke test", [&] { return learning_smoke(runs, cfg); }},
      {"lie-algebra vs euler actions", [&] { return directional_representation(runs, cfg); }},
      {"timing: lie-algebra lowest", [&] { return directional_timing(cfg); }},
      {"HER correctness", her_correctness},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %2d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
