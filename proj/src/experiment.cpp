#include "orient/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace orient {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw std::invalid_argument("invalid number for " + key + ": '" + v + "'");
  }
  return d;
}

long parse_long(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long n = 0;
  try {
    n = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw std::invalid_argument("invalid integer for " + key + ": '" + v + "'");
  }
  return n;
}

int parse_int(const std::string& key, const std::string& v) {
  return static_cast<int>(parse_long(key, v));
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    s += (i ? "," : "") + std::to_string(seeds[i]);
  }
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  char buf[256];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.6f,%.6f\n", r.env_step,
                  r.eval_success_rate, r.eval_avg_reward_per_step, r.train_s, r.rollout_s);
    out << buf;
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMetricsHeader) {
    throw std::runtime_error("metrics csv: unexpected header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw std::runtime_error("metrics csv: expected 5 fields: " + line);
    rows.push_back({parse_long("env_step", f[0]), parse_double("eval_success_rate", f[1]),
                    parse_double("eval_avg_reward_per_step", f[2]),
                    parse_double("train_s", f[3]), parse_double("rollout_s", f[4])});
  }
  return rows;
}

double average_training_success(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.eval_success_rate;
  return sum / static_cast<double>(rows.size());
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  for (double v : values) m.mean += v;
  m.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return m;
}

SeedSummary summarize_run(const RunResult& run) {
  return {run.seed,
          average_training_success(run.metrics),
          run.final_eval.success_rate,
          run.final_eval.avg_reward_per_step,
          run.timing,
          run.degenerate_decodes};
}

SummaryRecord summarize(const ExperimentConfig& cfg, const std::vector<SeedSummary>& runs) {
  SummaryRecord s;
  s.config = cfg;
  s.runs = runs;
  std::vector<double> avg, fin, rew;
  for (const SeedSummary& r : runs) {
    avg.push_back(r.avg_training_success);
    fin.push_back(r.final_success_rate);
    rew.push_back(r.final_avg_reward_per_step);
    s.train_s += r.timing.train_s;
    s.rollout_s += r.timing.rollout_s;
    s.decode_s += r.timing.decode_s;
    s.degenerate_decodes += r.degenerate_decodes;
  }
  s.avg_training_success = mean_stderr(avg);
  s.final_success_rate = mean_stderr(fin);
  s.final_avg_reward_per_step = mean_stderr(rew);
  return s;
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  const Hyperparams& hp = cfg.hp;
  out << "state_rep=" << to_string(cfg.state_repr) << '\n'
      << "action_rep=" << to_string(cfg.action_repr) << '\n'
      << "seeds=" << join_seeds(cfg.seeds) << '\n'
      << "total_steps=" << cfg.total_steps << '\n'
      << "episode_len=" << cfg.episode_len << '\n'
      << "max_angle=" << fmt(cfg.max_angle) << '\n'
      << "eps_orient=" << fmt(cfg.eps_orient) << '\n'
      << "final_eval_rollouts=" << cfg.final_eval_rollouts << '\n'
      << "eval_every=" << cfg.eval_every << '\n'
      << "eval_episodes=" << cfg.eval_episodes << '\n'
      << "gamma=" << fmt(hp.gamma) << '\n'
      << "soft_update_rate=" << fmt(hp.soft_update_rate) << '\n'
      << "batch_size=" << hp.batch_size << '\n'
      << "buffer_episodes=" << hp.buffer_episodes << '\n'
      << "noise_sigma=" << fmt(hp.noise_sigma) << '\n'
      << "random_action_prob=" << fmt(hp.random_action_prob) << '\n'
      << "her_k=" << hp.her_k << '\n'
      << "updates_per_episode=" << hp.updates_per_episode << '\n'
      << "hidden=" << join_ints(hp.hidden) << '\n'
      << "actor_lr=" << fmt(hp.actor_lr) << '\n'
      << "critic_lr=" << fmt(hp.critic_lr) << '\n'
      << "actor_final_scale=" << fmt(hp.actor_final_scale) << '\n';
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const long lo = parse_long("seeds", item.substr(0, dash));
      const long hi = parse_long("seeds", item.substr(dash + 1));
      if (lo < 0 || hi < lo) throw std::invalid_argument("invalid seed range: " + item);
      for (long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      const long s = parse_long("seeds", item);
      if (s < 0) throw std::invalid_argument("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (seeds.empty()) throw std::invalid_argument("empty seed list");
  return seeds;
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  Hyperparams& hp = cfg.hp;
  if (key == "state_rep") cfg.state_repr = parse_repr(value);
  else if (key == "action_rep") cfg.action_repr = parse_repr(value);
  else if (key == "seeds") cfg.seeds = parse_seed_list(value);
  else if (key == "total_steps" || key == "steps") cfg.total_steps = parse_long(key, value);
  else if (key == "episode_len") cfg.episode_len = parse_int(key, value);
  else if (key == "max_angle") cfg.max_angle = parse_double(key, value);
  else if (key == "eps_orient") cfg.eps_orient = parse_double(key, value);
  else if (key == "final_eval_rollouts") cfg.final_eval_rollouts = parse_int(key, value);
  else if (key == "eval_every") cfg.eval_every = parse_int(key, value);
  else if (key == "eval_episodes") cfg.eval_episodes = parse_int(key, value);
  else if (key == "gamma") hp.gamma = parse_double(key, value);
  else if (key == "soft_update_rate") hp.soft_update_rate = parse_double(key, value);
  else if (key == "batch_size") hp.batch_size = parse_int(key, value);
  else if (key == "buffer_episodes") hp.buffer_episodes = parse_int(key, value);
  else if (key == "noise_sigma") hp.noise_sigma = parse_double(key, value);
  else if (key == "random_action_prob") hp.random_action_prob = parse_double(key, value);
  else if (key == "her_k") hp.her_k = parse_int(key, value);
  else if (key == "updates_per_episode") hp.updates_per_episode = parse_int(key, value);
  else if (key == "hidden") {
    hp.hidden.clear();
    for (const std::string& w : split(value, ',')) hp.hidden.push_back(parse_int(key, w));
  } else if (key == "actor_lr") hp.actor_lr = parse_double(key, value);
  else if (key == "critic_lr") hp.critic_lr = parse_double(key, value);
  else if (key == "actor_final_scale") hp.actor_final_scale = parse_double(key, value);
  else if (key == "out_dir" || key == "out") cfg.out_dir = value;
  else throw std::invalid_argument("unknown config key: " + key);
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

void apply_config_file(ExperimentConfig& cfg, std::istream& in) {
  for (const auto& [key, value] : read_key_values(in)) apply_config_value(cfg, key, value);
}

void write_summary(std::ostream& out, const SummaryRecord& s) {
  write_config(out, s.config);
  out << "runs=" << s.runs.size() << '\n'
      << "avg_training_success_mean=" << fmt(s.avg_training_success.mean) << '\n'
      << "avg_training_success_stderr=" << fmt(s.avg_training_success.stderr_) << '\n'
      << "final_success_rate_mean=" << fmt(s.final_success_rate.mean) << '\n'
      << "final_success_rate_stderr=" << fmt(s.final_success_rate.stderr_) << '\n'
      << "final_avg_reward_per_step_mean=" << fmt(s.final_avg_reward_per_step.mean) << '\n'
      << "final_avg_reward_per_step_stderr=" << fmt(s.final_avg_reward_per_step.stderr_) << '\n'
      << "train_s=" << fmt(s.train_s) << '\n'
      << "rollout_s=" << fmt(s.rollout_s) << '\n'
      << "decode_s=" << fmt(s.decode_s) << '\n'
      << "degenerate_decodes=" << s.degenerate_decodes << '\n';
  for (const SeedSummary& r : s.runs) {
    const std::string p = "seed." + std::to_string(r.seed) + ".";
    out << p << "avg_training_success=" << fmt(r.avg_training_success) << '\n'
        << p << "final_success_rate=" << fmt(r.final_success_rate) << '\n'
        << p << "final_avg_reward_per_step=" << fmt(r.final_avg_reward_per_step) << '\n'
        << p << "train_s=" << fmt(r.timing.train_s) << '\n'
        << p << "rollout_s=" << fmt(r.timing.rollout_s) << '\n'
        << p << "decode_s=" << fmt(r.timing.decode_s) << '\n'
        << p << "degenerate_decodes=" << r.degenerate_decodes << '\n';
  }
}

int worker_count() {
  if (const char* env = std::getenv("ORIENT_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string cell_name(Repr state, Repr action) {
  return std::string(to_string(state)) + "__" + std::string(to_string(action));
}

namespace {

// Runs job(i) for i in [0, n) on `workers` threads; rethrows the first failure.
template <class Job>
void parallel_for(int n, int workers, Job job) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int count = std::clamp(workers, 1, std::max(1, n));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

void write_crash_report(const std::filesystem::path& p, const ExperimentConfig& cfg,
                        std::uint64_t seed, const std::string& what) {
  std::ofstream out(p);
  out << "error=" << what << '\n' << "seed=" << seed << '\n';
  write_config(out, cfg);
}

}  // namespace

ExperimentOutputs run_experiment(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  ExperimentOutputs outputs;
  outputs.dir = std::filesystem::path(cfg.out_dir) / cell_name(cfg.state_repr, cfg.action_repr);
  std::filesystem::create_directories(outputs.dir);

  const int n = static_cast<int>(cfg.seeds.size());
  std::vector<SeedSummary> runs(n);
  outputs.curves.resize(n);
  outputs.checkpoints.resize(n);
  parallel_for(n, workers, [&](int i) {
    const std::uint64_t seed = cfg.seeds[i];
    const std::string stem = "seed_" + std::to_string(seed);
    RunResult run;
    try {
      run = train(cfg, seed);
    } catch (const DivergenceError& e) {
      write_crash_report(outputs.dir / (stem + ".crash.txt"), cfg, seed, e.what());
      throw;
    }
    const auto csv = outputs.dir / (stem + ".csv");
    {
      std::ofstream out = open_out(csv);
      write_metrics_csv(out, run.metrics);
      check_written(out, csv);
    }
    const auto ckpt = outputs.dir / (stem + ".policy");
    {
      std::ofstream out = open_out(ckpt);
      run.policy.save(out);
      check_written(out, ckpt);
    }
    outputs.curves[i] = csv;
    outputs.checkpoints[i] = ckpt;
    runs[i] = summarize_run(run);
  });

  outputs.summary = summarize(cfg, runs);
  outputs.summary_file = outputs.dir / "summary.txt";
  std::ofstream out = open_out(outputs.summary_file);
  write_summary(out, outputs.summary);
  check_written(out, outputs.summary_file);
  return outputs;
}

std::vector<ExperimentOutputs> run_grid(const ExperimentConfig& base, int workers) {
  std::vector<ExperimentConfig> cells;
  for (Repr s : kAllReprs) {
    for (Repr a : kAllReprs) {
      ExperimentConfig c = base;
      c.state_repr = s;
      c.action_repr = a;
      c.validate();
      cells.push_back(c);
    }
  }
  std::vector<ExperimentOutputs> out(cells.size());
  parallel_for(static_cast<int>(cells.size()), workers,
               [&](int i) { out[i] = run_experiment(cells[i], 1); });
  return out;
}

std::vector<TimingEntry> bench_timing(const ExperimentConfig& base, int trials,
                                      int decode_calls, int update_calls) {
  using Clock = std::chrono::steady_clock;
  struct Cell {
    ExperimentConfig cfg;
    std::vector<Eigen::VectorXd> raws;
    std::unique_ptr<DdpgAgent> agent;
    std::unique_ptr<ReplayBuffer> buffer;
    Rng replay{0};
    TimingEntry entry;
  };

  std::vector<Cell> cells;
  for (Repr r : kAllReprs) {
    Cell c;
    c.cfg = base;
    c.cfg.state_repr = r;
    c.cfg.action_repr = r;
    c.cfg.validate();
    c.entry.repr = r;
    c.entry.decode_per_call_s = c.entry.update_per_call_s = 1e300;

    Rng rng(stream_seed(0, Stream::kExplore));
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    const int adim = static_cast<int>(action_dim(r));
    for (int i = 0; i < decode_calls; ++i) {
      Eigen::VectorXd raw(adim);
      for (int j = 0; j < adim; ++j) raw(j) = box(rng);
      c.raws.push_back(raw);
    }

    Rng init = make_stream(0, Stream::kInit);
    c.agent = std::make_unique<DdpgAgent>(static_cast<int>(2 * obs_dim(r)), adim, c.cfg.hp, init);
    c.buffer = std::make_unique<ReplayBuffer>(c.cfg.hp.buffer_episodes);
    const EnvConfig env_cfg = c.cfg.env_config(stream_seed(0, Stream::kEnv));
    OrientationEnv env(env_cfg);
    Rng her = make_stream(0, Stream::kHer);
    for (int ep = 0; ep < 20; ++ep) {
      env.reset();
      EpisodeRecord rec;
      rec.goal = env.state().goal;
      rec.states.push_back(env.state().current);
      for (int t = 0; t < c.cfg.episode_len; ++t) {
        const Eigen::VectorXd& raw = c.raws[(ep * c.cfg.episode_len + t) % c.raws.size()];
        const Rotation a =
            decode_action(std::span<const double>(raw.data(), raw.size()), c.cfg.action_spec()).action;
        rec.states.push_back(env.step(a).achieved);
        rec.actions_raw.emplace_back(raw.data(), raw.data() + raw.size());
      }
      auto entries = her_plan(rec, c.cfg.hp.her_k, her, env_cfg);
      c.buffer->add(std::move(rec), std::move(entries));
    }
    cells.push_back(std::move(c));
  }

  // Round-robin so slow drifts of the machine hit every cell alike.
  volatile double sink = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    for (Cell& c : cells) {
      const ActionSpec spec = c.cfg.action_spec();
      auto t0 = Clock::now();
      for (const Eigen::VectorXd& raw : c.raws) {
        const Rotation a = decode_action(std::span<const double>(raw.data(), raw.size()), spec).action;
        sink = sink + static_cast<double>(a.repr() == Repr::kQuat);
      }
      const double decode = std::chrono::duration<double>(Clock::now() - t0).count();
      c.entry.decode_per_call_s = std::min(c.entry.decode_per_call_s, decode / decode_calls);

      t0 = Clock::now();
      for (int u = 0; u < update_calls; ++u) {
        const Batch batch = c.buffer->sample(c.cfg.hp.batch_size, c.replay, c.cfg.state_repr);
        c.agent->update(batch);
        c.agent->update_targets();
      }
      const double update = std::chrono::duration<double>(Clock::now() - t0).count();
      c.entry.update_per_call_s = std::min(c.entry.update_per_call_s, update / update_calls);
    }
  }

  std::vector<TimingEntry> out;
  for (Cell& c : cells) {
    const double episodes = static_cast<double>(c.cfg.total_steps) / c.cfg.episode_len;
    c.entry.decode_s = c.entry.decode_per_call_s * static_cast<double>(c.cfg.total_steps);
    c.entry.update_s = c.entry.update_per_call_s * episodes * c.cfg.hp.updates_per_episode;
    out.push_back(c.entry);
  }
  return out;
}

void write_timing(std::ostream& out, const std::vector<TimingEntry>& entries) {
  out << "repr,decode_per_call_s,update_per_call_s,decode_s,update_s,total_s\n";
  char buf[256];
  for (const TimingEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.6f,%.6f,%.6f\n",
                  std::string(to_string(e.repr)).c_str(), e.decode_per_call_s,
                  e.update_per_call_s, e.decode_s, e.update_s, e.total());
    out << buf;
  }
}

}  // namespace orient
