#pragma once

// Experiment driver: multi-seed runs, the 6x6 representation grid, CSV and
// summary files, config files and the timing benchmark.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "orient/trainer.hpp"

namespace orient {

inline constexpr const char* kMetricsHeader =
    "env_step,eval_success_rate,eval_avg_reward_per_step,train_s,rollout_s";

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

// Unweighted mean of the evaluation curve.
double average_training_success(const std::vector<MetricsRow>& rows);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);

struct SeedSummary {
  std::uint64_t seed = 0;
  double avg_training_success = 0.0;
  double final_success_rate = 0.0;
  double final_avg_reward_per_step = 0.0;
  RunTiming timing;
  std::size_t degenerate_decodes = 0;
};

struct SummaryRecord {
  ExperimentConfig config;
  std::vector<SeedSummary> runs;
  MeanStderr avg_training_success;
  MeanStderr final_success_rate;
  MeanStderr final_avg_reward_per_step;
  double train_s = 0.0;
  double rollout_s = 0.0;
  double decode_s = 0.0;
  std::size_t degenerate_decodes = 0;
};

SeedSummary summarize_run(const RunResult& run);
SummaryRecord summarize(const ExperimentConfig& cfg, const std::vector<SeedSummary>& runs);

// One `key=value` per line.
void write_summary(std::ostream& out, const SummaryRecord& summary);
std::map<std::string, std::string> read_key_values(std::istream& in);

// Config files use the same `key=value` format as the summary's config echo.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void apply_config_file(ExperimentConfig& cfg, std::istream& in);
void write_config(std::ostream& out, const ExperimentConfig& cfg);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Worker count from ORIENT_WORKERS, else the hardware concurrency.
int worker_count();

struct ExperimentOutputs {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> curves;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path summary_file;
  SummaryRecord summary;
};

std::string cell_name(Repr state, Repr action);

// Trains every seed of `cfg` and writes, under cfg.out_dir/<state>__<action>/:
// seed_<n>.csv, seed_<n>.policy and summary.txt. A diverged seed leaves
// seed_<n>.crash.txt and rethrows.
ExperimentOutputs run_experiment(const ExperimentConfig& cfg, int workers = 1);

// All 36 state x action cells with the remaining settings from `base`.
std::vector<ExperimentOutputs> run_grid(const ExperimentConfig& base, int workers = 1);

struct TimingEntry {
  Repr repr = Repr::kLieAlgebra;
  double decode_per_call_s = 0.0;
  double update_per_call_s = 0.0;
  // Per-call costs scaled to one full run of `base`.
  double decode_s = 0.0;
  double update_s = 0.0;
  double total() const { return decode_s + update_s; }
};

// Min-of-trials cost of action decoding and network updates for the six
// same-representation pairs, measured round-robin on this machine.
std::vector<TimingEntry> bench_timing(const ExperimentConfig& base, int trials = 7,
                                      int decode_calls = 20000, int update_calls = 40);
void write_timing(std::ostream& out, const std::vector<TimingEntry>& entries);

}  // namespace orient
