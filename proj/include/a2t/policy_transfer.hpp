#ifndef A2T_POLICY_TRANSFER_HPP
#define A2T_POLICY_TRANSFER_HPP

#include <functional>
#include <random>
#include <vector>

#include "a2t/a2t_core.hpp"
#include "a2t/environments.hpp"

namespace a2t {

struct EpisodeStep {
  std::vector<double> s;
  int a = 0;
  double r = 0.0;  // reward following (s, a)
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  double episode_return = 0.0;
  std::vector<double> mean_weights;  // attention simplex, mean over states
};

enum class PolicyAlgorithm { Reinforce, ActorCritic };
enum class BaselineMode { None, RunningMean };

struct PolicyTrainConfig {
  PolicyAlgorithm algorithm = PolicyAlgorithm::Reinforce;
  double lr_attention = 0.05;
  double lr_base = 0.05;
  double lr_critic = 0.5;  // actor-critic only
  BaselineMode baseline = BaselineMode::RunningMean;
  double baseline_decay = 0.9;
  double gamma = 1.0;
  bool discounted_return = false;  // REINFORCE return aggregation
  double norm_eps = 1e-8;          // actor-critic gradient normalization
};

/// TD(0) critic with a scalar linear-head value network.
struct CriticState {
  Net value_net;
  double gamma = 0.99;
  double learning_rate = 0.5;
};

CriticState make_critic(int input_dim, int hidden, double gamma,
                        double learning_rate, std::mt19937_64& rng);

double critic_value(const CriticState& critic, std::span<const double> s);

/// delta = r + gamma*V(s') [0 if terminal] - V(s)
double td_error(const CriticState& critic, std::span<const double> s, double r,
                std::span<const double> s_next, bool terminal);

int sample_action(std::span<const double> probs, std::mt19937_64& rng);

EpisodeTrace rollout(const Ensemble& ens, Environment& env,
                     std::mt19937_64& rng);

/// One REINFORCE update from a complete episode. The attention gradient
/// flows through pi_T; the base gradient flows through pi_B at the sampled
/// actions. `baseline` is read before being updated (running-mean mode).
void reinforce_step(Ensemble& ens, const EpisodeTrace& trace,
                    const PolicyTrainConfig& cfg, double& baseline);

/// One actor-critic transition update: normalized log-gradient steps scaled
/// by the TD error, plus a TD(0) critic update.
void actor_critic_step(Ensemble& ens, CriticState& critic,
                       std::span<const double> s, int a, double r,
                       std::span<const double> s_next, bool terminal,
                       const PolicyTrainConfig& cfg);

struct PolicyEpisodeRecord {
  int episode = 0;
  double episode_return = 0.0;
  int length = 0;
  std::vector<double> mean_weights;
};

using PolicyLogger = std::function<void(const PolicyEpisodeRecord&)>;
/// Returning true stops training after the current episode.
using PolicyStop = std::function<bool(const PolicyEpisodeRecord&)>;

/// Runs `episodes` rollouts with per-episode (REINFORCE) or per-step
/// (actor-critic) updates. Returns the per-episode records.
std::vector<PolicyEpisodeRecord> train_policy(
    Ensemble& ens, Environment& env, const PolicyTrainConfig& cfg,
    int episodes, std::mt19937_64& rng, const PolicyLogger& logger = nullptr,
    CriticState* critic = nullptr, const PolicyStop& stop = nullptr);

}  // namespace a2t

#endif
