#ifndef A2T_ENVIRONMENTS_HPP
#define A2T_ENVIRONMENTS_HPP

#include <cstdint>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

namespace a2t {

enum class EnvKind { Chain, Puddle, Catch };
enum class MaskRegion { None, LowerLeft, LowerRight, UpperHalf, LowerHalf };

struct EnvConfig {
  EnvKind kind = EnvKind::Chain;

  // Chain: states 0..chain_length-1, actions {left, right}.
  int chain_length = 21;
  std::vector<int> chain_starts = {0, 20};
  int chain_goal = 10;

  // Puddle: rows x cols grid, actions {north, south, east, west}.
  int rows = 12;
  int cols = 12;
  std::vector<std::pair<int, int>> puddle_starts;
  std::pair<int, int> puddle_goal = {11, 11};
  std::vector<std::tuple<int, int, double>> penalties;  // (row, col, penalty)
  double step_penalty = -0.05;
  double goal_reward = 10.0;
  double slip = 0.1;

  // Catch: rows x cols grid, actions {left, stay, right}. Observation is
  // two stacked occupancy planes (ball, paddle).
  int catch_rows = 10;
  int catch_cols = 10;
  MaskRegion mask = MaskRegion::None;
  // Lateral ball drift offset applied at reset; when shifted, drift is
  // drawn from {0,+1} instead of {-1,0,+1} (a foreign-task variant).
  bool catch_shifted_drift = false;

  int episode_cap = 100;
  double reward_scale = 1.0;
  uint64_t seed = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;
  int steps = 0;
};

/// Zero the ball-plane entries of a catch observation inside the region.
/// The paddle plane (second half of the vector) is never touched.
void apply_mask(std::vector<double>& obs, MaskRegion region, int rows,
                int cols);

class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  /// Starts a new episode. Returns the learner observation (masked when the
  /// config carries a mask region).
  std::vector<double> reset();

  StepResult step(int action);

  /// Learner observation of the current state.
  std::vector<double> observe() const;
  /// Observation with the configured mask applied (catch only).
  std::vector<double> observe_masked() const;
  /// Full observation, ignoring any configured mask.
  std::vector<double> observe_unmasked() const;

  int action_count() const;
  int observation_dim() const;
  bool terminal() const { return terminal_; }
  int steps() const { return steps_; }
  const EnvConfig& config() const { return cfg_; }

  // Tabular support (chain/puddle): state enumeration for heatmaps and
  // oracle tests.
  int state_count() const;
  std::vector<double> observation_of_state(int state) const;

  int ball_landing_col() const;  // catch only; predicted landing column

 private:
  EnvConfig cfg_;
  std::mt19937_64 rng_;
  bool terminal_ = true;
  int steps_ = 0;

  int chain_pos_ = 0;
  int prow_ = 0, pcol_ = 0;              // puddle agent cell
  int ball_r_ = 0, ball_c_ = 0, drift_ = 0, paddle_ = 0;  // catch

  std::vector<std::vector<double>> penalty_map_;

  std::vector<double> raw_observe() const;
  void validate() const;
};

/// Standard layouts used by the experiments.
EnvConfig chain_world_config(uint64_t seed = 0);
EnvConfig puddle1_config(uint64_t seed = 0);
EnvConfig puddle2_config(uint64_t seed = 0);
EnvConfig catch_config(MaskRegion mask = MaskRegion::None, uint64_t seed = 0);

}  // namespace a2t

#endif
