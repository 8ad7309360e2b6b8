#ifndef A2T_VALUE_TRANSFER_HPP
#define A2T_VALUE_TRANSFER_HPP

#include <deque>
#include <functional>
#include <random>
#include <vector>

#include "a2t/a2t_core.hpp"
#include "a2t/environments.hpp"

namespace a2t {

struct Transition {
  std::vector<double> s;
  int a = 0;
  double r = 0.0;
  std::vector<double> s_next;
  bool terminal = false;
};

/// FIFO replay memory. Nonzero-reward transitions are kept with probability
/// rho (sparse-reward variant); zero-reward transitions always enter.
class ReplayBuffer {
 public:
  ReplayBuffer(size_t capacity, double rho = 1.0);

  void store(Transition t, std::mt19937_64& rng);
  const Transition& sample(std::mt19937_64& rng) const;
  size_t size() const { return queue_.size(); }
  size_t capacity() const { return capacity_; }
  const std::deque<Transition>& contents() const { return queue_; }

 private:
  size_t capacity_;
  double rho_;
  std::deque<Transition> queue_;
};

/// Frozen snapshots of the attention and base parameters used for target
/// computation; synced from the online networks every `sync_period` learn
/// steps.
struct TargetPair {
  Net attention;
  Net base;  // ignored when the ensemble has no base
  bool has_base = false;
  int sync_period = 1000;
  int learn_steps = 0;
};

TargetPair make_targets(const Ensemble& ens, int sync_period);
void sync_targets(TargetPair& targets, const Ensemble& ens);

struct ValueTrainConfig {
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.1;
  int eps_anneal_steps = 50000;
  double eval_eps = 0.05;
  int batch_size = 32;
  int learn_start = 1000;
  int learn_every = 4;
  int sync_period = 1000;
  bool clip_rewards = false;
  size_t replay_capacity = 50000;
  double rho = 1.0;
  int steps_per_epoch = 20000;
  int eval_steps = 2000;
  double learning_rate = 0.025;
  double lr_attention = 0.0;  // attention optimizer rate; 0 = learning_rate
  double rms_decay = 0.95;
  double rms_epsilon = 0.01;
  int hidden = 32;
};

int act_epsilon_greedy(const Ensemble& ens, std::span<const double> s,
                       double eps, std::mt19937_64& rng);

double clip_reward(double r);

/// y = r' + gamma * max_a' Q_T(s', a') evaluated with target parameters;
/// r' is the (optionally clipped) reward; no bootstrap on terminal.
double q_target(const Ensemble& ens, const TargetPair& targets,
                const Transition& t, double gamma, bool clip);

/// One batched Q-learning update of theta_a and theta_b from replay.
/// Returns false (no-op) when the buffer is below the learn-start threshold.
bool learn_step(Ensemble& ens, TargetPair& targets, ReplayBuffer& buffer,
                const ValueTrainConfig& cfg, Optimizer& opt_attention,
                Optimizer& opt_base, std::mt19937_64& rng);

struct EpochStats {
  int epoch = 0;
  double eval_mean_score = 0.0;
  int eval_episodes = 0;
  std::vector<double> mean_weights;  // over states visited while acting
  double eps = 0.0;
};

using ValueLogger = std::function<void(const EpochStats&)>;
/// Returning true stops training after the current epoch.
using StopPredicate = std::function<bool(const EpochStats&)>;

/// Alternates epsilon-greedy acting with replay learning; evaluates at
/// eval_eps after each epoch.
std::vector<EpochStats> train_value(Ensemble& ens, Environment& env,
                                    const ValueTrainConfig& cfg, int epochs,
                                    std::mt19937_64& rng,
                                    const ValueLogger& logger = nullptr,
                                    const StopPredicate& stop = nullptr);

/// Greedy-ish evaluation of the ensemble at the given epsilon over a step
/// budget; returns (mean completed-episode score, episode count).
std::pair<double, int> evaluate_value(const Ensemble& ens, Environment& env,
                                      double eps, int step_budget,
                                      std::mt19937_64& rng);

/// Standalone DQN training: a degenerate ensemble (no experts) whose base
/// network is returned. Used to build source-task experts.
Net train_dqn_expert(Environment& env, const ValueTrainConfig& cfg, int epochs,
                     std::mt19937_64& rng,
                     const StopPredicate& stop = nullptr);

}  // namespace a2t

#endif
