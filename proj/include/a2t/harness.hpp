#ifndef A2T_HARNESS_HPP
#define A2T_HARNESS_HPP

#include <string>
#include <vector>

#include "a2t/config.hpp"
#include "a2t/experts.hpp"
#include "a2t/policy_transfer.hpp"
#include "a2t/value_transfer.hpp"

namespace a2t {

enum class Algorithm {
  ReinforceA2T,
  ActorCriticA2T,
  QLearningA2T,
  ScratchBaseline,
  FineTuneBaseline
};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct ExperimentConfig {
  std::string name;
  EnvConfig env;
  Algorithm algorithm = Algorithm::ScratchBaseline;
  Mode mode = Mode::Value;
  std::vector<std::string> expert_names;
  std::string finetune_from;  // FineTuneBaseline
  bool attention_only = false;  // ensemble without a base network
  int budget = 10;              // episodes (policy) or epochs (value)
  std::vector<uint64_t> seeds;
  std::string output_dir;
  std::string expert_store;
  // Optional early stop once the smoothed score reaches `threshold`.
  bool has_threshold = false;
  double threshold = 0.0;
  bool stop_at_threshold = false;
  int policy_smooth_window = 50;
  PolicyTrainConfig policy;
  ValueTrainConfig value;
  int hidden = 32;
};

ExperimentConfig parse_experiment_config(const Config& cfg);
ExperimentConfig load_experiment_config(const std::string& path);

struct SeedRunResult {
  uint64_t seed = 0;
  // One entry per episode (policy) or epoch (value).
  std::vector<double> scores;
  std::vector<int> lengths;  // policy only
  std::vector<std::vector<double>> weights;
  int steps_to_threshold = -1;  // -1: never reached
  double final_score = 0.0;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  std::vector<SeedRunResult> runs;
  std::vector<std::string> member_names;
  double mean_final_score = 0.0;
  double mean_steps_to_threshold = 0.0;  // budget counts as the cap
};

/// Builds the ensemble for one seed of an experiment (experts loaded from
/// the store, base/attention freshly initialized or fine-tune-seeded).
Ensemble build_experiment_ensemble(const ExperimentConfig& cfg,
                                   uint64_t seed,
                                   std::vector<std::string>* member_names);

/// Trains every seed, writes per-seed CSVs, a seed-averaged CSV, and SVG
/// learning-curve / attention-evolution plots under cfg.output_dir.
/// Applies the A2T_SEED_OFFSET environment variable to all seeds.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SuiteEntry {
  std::string name;
  bool ok = false;
  std::string error;
  double final_score = 0.0;
  double steps_to_threshold = 0.0;
};

/// Runs the experiment configs in order; writes summary.csv next to the
/// results. Returns false if any experiment failed.
bool run_suite(const std::vector<std::string>& config_paths,
               const std::string& summary_path,
               std::vector<SuiteEntry>* entries = nullptr);

/// Per-state rendering of final attention weights for tabular envs.
void emit_attention_heatmap(const Ensemble& ens, const Environment& env,
                            const std::vector<std::string>& member_names,
                            const std::string& svg_path);

// Plot helpers (plain static SVG).
struct Series {
  std::string label;
  std::vector<double> y;
  std::vector<double> y_min;  // optional band
  std::vector<double> y_max;
};
void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series);

uint64_t seed_offset_from_env();

}  // namespace a2t

#endif
