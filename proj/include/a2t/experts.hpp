#ifndef A2T_EXPERTS_HPP
#define A2T_EXPERTS_HPP

#include <optional>
#include <string>

#include "a2t/a2t_core.hpp"
#include "a2t/policy_transfer.hpp"
#include "a2t/value_transfer.hpp"

namespace a2t {

enum class ExpertKind {
  Favorable,
  Partial,
  NegatedTopLayer,
  InverseReward,
  Masked
};

struct ExpertSpec {
  ExpertKind kind = ExpertKind::Favorable;
  Mode mode = Mode::Value;
  EnvConfig env;
  MaskRegion mask = MaskRegion::None;  // Masked kind only
  int budget = 10;                     // epochs (value) or episodes (policy)
  uint64_t seed = 0;
  std::string name;
  // Training hyperparameters; defaults suit the desk-scale worlds.
  PolicyTrainConfig policy_cfg;
  ValueTrainConfig value_cfg;
};

struct ExpertRecord {
  Net net;
  ExpertSpec spec;
  double eval_score = 0.0;
  uint64_t checksum = 0;
};

struct ExpertEval {
  double mean = 0.0;
  int episodes = 0;
  // Catch only: split by the ball's landing side.
  double left_mean = 0.0;
  double right_mean = 0.0;
  int left_episodes = 0;
  int right_episodes = 0;
};

/// Trains (or derives) an expert per its spec. NegatedTopLayer requires a
/// donor record whose final-layer weights are negated.
ExpertRecord build_expert(const ExpertSpec& spec,
                          const ExpertRecord* donor = nullptr);

/// Greedy (value) or sampled (policy) evaluation over `episodes` episodes.
ExpertEval evaluate_expert(const ExpertRecord& rec, Environment& env,
                           int episodes, std::mt19937_64& rng);

/// Hand-coded optimal chain policy: moves toward the goal deterministically.
/// Oracle for tests; not used by the training pipeline.
Net optimal_chain_policy(int length, int goal);

/// Directory layout: <dir>/model.a2t, <dir>/spec.cfg, <dir>/eval.csv.
void save_expert(const ExpertRecord& rec, const std::string& dir);
ExpertRecord load_expert(const std::string& dir);

ExpertSlot expert_slot(const ExpertRecord& rec);

std::string to_string(ExpertKind kind);
ExpertKind expert_kind_from_string(const std::string& s);
std::string to_string(MaskRegion region);
MaskRegion mask_region_from_string(const std::string& s);
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);
std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& s);

}  // namespace a2t

#endif
