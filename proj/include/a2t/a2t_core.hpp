#ifndef A2T_A2T_CORE_HPP
#define A2T_A2T_CORE_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "a2t/approximator.hpp"
#include "a2t/environments.hpp"

namespace a2t {

enum class Mode { Policy, Value };

/// One frozen source-task solution. If a mask region is set, the expert
/// evaluates its own masked view of the observation (the attention and base
/// networks always see the full observation).
struct ExpertSlot {
  Net net;
  MaskRegion mask = MaskRegion::None;
  int mask_rows = 0;
  int mask_cols = 0;
  uint64_t checksum = 0;
  std::string name;
};

struct SolutionOutput {
  Mode mode = Mode::Policy;
  std::vector<double> values;
};

struct CombineResult {
  std::vector<double> output;   // K_T(s), per action
  std::vector<double> weights;  // attention simplex, base last
  std::vector<std::vector<double>> member_outputs;
};

/// Attention mixture over N frozen experts plus an optional trainable base
/// network. The base occupies the last attention slot. Ensembles without a
/// base mix the experts alone (attention width N).
class Ensemble {
 public:
  Ensemble(Mode mode, std::vector<ExpertSlot> experts, std::optional<Net> base,
           Net attention);

  /// Convenience constructor: fresh base and attention nets with one hidden
  /// layer of `hidden` units.
  static Ensemble make(Mode mode, std::vector<ExpertSlot> experts,
                       bool with_base, int input_dim, int action_count,
                       int hidden, std::mt19937_64& rng);

  Mode mode() const { return mode_; }
  int member_count() const {
    return static_cast<int>(experts_.size()) + (base_ ? 1 : 0);
  }
  int expert_count() const { return static_cast<int>(experts_.size()); }
  bool has_base() const { return base_.has_value(); }
  int action_count() const;
  int input_dim() const;

  const std::vector<ExpertSlot>& experts() const { return experts_; }
  const Net& base() const;
  Net& mutable_base();
  const Net& attention() const { return attention_; }
  Net& mutable_attention() { return attention_; }

  std::vector<double> attend(std::span<const double> s) const;
  CombineResult combine(std::span<const double> s) const;

  /// combine() evaluated with substitute attention/base parameters (target
  /// networks); the frozen experts are shared.
  CombineResult combine_with(const Net& attention, const Net* base,
                             std::span<const double> s) const;

  /// Gradient of log pi_T(s,a) w.r.t. the attention parameters only
  /// (experts and base treated as constants). Policy mode.
  Gradient grad_attention_logpi(std::span<const double> s, int a) const;

  /// Descent gradient of 0.5*(y - Q_T(s,a))^2 w.r.t. the attention
  /// parameters. Value mode.
  Gradient grad_attention_qloss(std::span<const double> s, int a,
                                double y) const;

  /// Recompute expert checksums; returns the first violated expert index,
  /// or nullopt when all experts are intact.
  std::optional<int> freeze_check() const;

  std::vector<double> expert_view(int i, std::span<const double> s) const;

 private:
  Mode mode_;
  std::vector<ExpertSlot> experts_;
  std::optional<Net> base_;
  Net attention_;
};

}  // namespace a2t

#endif
