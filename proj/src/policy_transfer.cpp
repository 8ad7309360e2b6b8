#include "a2t/policy_transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace a2t {

CriticState make_critic(int input_dim, int hidden, double gamma,
                        double learning_rate, std::mt19937_64& rng) {
  CriticState c;
  c.value_net = make_net({input_dim, hidden, 1}, Head::Linear, rng);
  c.gamma = gamma;
  c.learning_rate = learning_rate;
  return c;
}

double critic_value(const CriticState& critic, std::span<const double> s) {
  return forward(critic.value_net, s)[0];
}

double td_error(const CriticState& critic, std::span<const double> s, double r,
                std::span<const double> s_next, bool terminal) {
  double bootstrap = terminal ? 0.0 : critic.gamma * critic_value(critic, s_next);
  return r + bootstrap - critic_value(critic, s);
}

int sample_action(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  double cum = 0.0;
  for (size_t a = 0; a < probs.size(); ++a) {
    cum += probs[a];
    if (x < cum) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

EpisodeTrace rollout(const Ensemble& ens, Environment& env,
                     std::mt19937_64& rng) {
  if (ens.mode() != Mode::Policy)
    throw std::logic_error("rollout: policy mode required");
  EpisodeTrace trace;
  std::vector<double> s = env.reset();
  std::vector<double> weight_sum(static_cast<size_t>(ens.member_count()), 0.0);
  while (true) {
    CombineResult c = ens.combine(s);
    int a = sample_action(c.output, rng);
    for (size_t i = 0; i < weight_sum.size(); ++i)
      weight_sum[i] += c.weights[i];
    StepResult step = env.step(a);
    trace.steps.push_back({std::move(s), a, step.reward});
    trace.episode_return += step.reward;
    if (step.terminal) break;
    s = std::move(step.observation);
  }
  trace.mean_weights = std::move(weight_sum);
  for (double& w : trace.mean_weights)
    w /= static_cast<double>(trace.steps.size());
  return trace;
}

namespace {

double trace_return(const EpisodeTrace& trace, const PolicyTrainConfig& cfg) {
  if (!cfg.discounted_return) return trace.episode_return;
  double g = 0.0;
  for (size_t t = trace.steps.size(); t-- > 0;)
    g = trace.steps[t].r + cfg.gamma * g;
  return g;
}

}  // namespace

void reinforce_step(Ensemble& ens, const EpisodeTrace& trace,
                    const PolicyTrainConfig& cfg, double& baseline) {
  if (trace.steps.empty())
    throw std::invalid_argument("reinforce_step: empty trace");
  double r = trace_return(trace, cfg);
  double advantage = r - (cfg.baseline == BaselineMode::None ? 0.0 : baseline);

  if (cfg.lr_attention > 0.0) {
    Gradient ga = zero_gradient(ens.attention());
    for (const EpisodeStep& st : trace.steps)
      add_gradient(ga, ens.grad_attention_logpi(st.s, st.a));
    scale_gradient(ga, cfg.lr_attention * advantage);
    Optimizer sgd = make_sgd(1.0);
    apply_update(ens.mutable_attention(), ga, sgd, /*ascent=*/true);
  }
  if (ens.has_base() && cfg.lr_base > 0.0) {
    Gradient gb = zero_gradient(ens.base());
    for (const EpisodeStep& st : trace.steps)
      add_gradient(gb, log_prob_grad(ens.base(), st.s, st.a));
    scale_gradient(gb, cfg.lr_base * advantage);
    Optimizer sgd = make_sgd(1.0);
    apply_update(ens.mutable_base(), gb, sgd, /*ascent=*/true);
  }
  if (cfg.baseline == BaselineMode::RunningMean)
    baseline = cfg.baseline_decay * baseline + (1.0 - cfg.baseline_decay) * r;
}

void actor_critic_step(Ensemble& ens, CriticState& critic,
                       std::span<const double> s, int a, double r,
                       std::span<const double> s_next, bool terminal,
                       const PolicyTrainConfig& cfg) {
  double delta = td_error(critic, s, r, s_next, terminal);

  if (cfg.lr_attention > 0.0) {
    Gradient ga = ens.grad_attention_logpi(s, a);
    double norm = gradient_norm(ga);
    scale_gradient(ga, cfg.lr_attention * delta / (norm + cfg.norm_eps));
    Optimizer sgd = make_sgd(1.0);
    apply_update(ens.mutable_attention(), ga, sgd, /*ascent=*/true);
  }
  if (ens.has_base() && cfg.lr_base > 0.0) {
    Gradient gb = log_prob_grad(ens.base(), s, a);
    double norm = gradient_norm(gb);
    scale_gradient(gb, cfg.lr_base * delta / (norm + cfg.norm_eps));
    Optimizer sgd = make_sgd(1.0);
    apply_update(ens.mutable_base(), gb, sgd, /*ascent=*/true);
  }
  // TD(0) critic: V-params += lr * delta * grad V(s)
  Gradient gv = backward(critic.value_net, s, std::vector<double>{1.0});
  scale_gradient(gv, critic.learning_rate * delta);
  Optimizer sgd = make_sgd(1.0);
  apply_update(critic.value_net, gv, sgd, /*ascent=*/true);
}

std::vector<PolicyEpisodeRecord> train_policy(
    Ensemble& ens, Environment& env, const PolicyTrainConfig& cfg,
    int episodes, std::mt19937_64& rng, const PolicyLogger& logger,
    CriticState* critic, const PolicyStop& stop) {
  if (ens.mode() != Mode::Policy)
    throw std::logic_error("train_policy: policy mode required");
  CriticState local_critic;
  if (cfg.algorithm == PolicyAlgorithm::ActorCritic && critic == nullptr) {
    local_critic = make_critic(env.observation_dim(), 32, cfg.gamma,
                               cfg.lr_critic, rng);
    critic = &local_critic;
  }
  std::vector<PolicyEpisodeRecord> records;
  double baseline = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    PolicyEpisodeRecord rec;
    rec.episode = ep;
    if (cfg.algorithm == PolicyAlgorithm::Reinforce) {
      EpisodeTrace trace = rollout(ens, env, rng);
      reinforce_step(ens, trace, cfg, baseline);
      rec.episode_return = trace.episode_return;
      rec.length = static_cast<int>(trace.steps.size());
      rec.mean_weights = trace.mean_weights;
    } else {
      std::vector<double> s = env.reset();
      std::vector<double> weight_sum(
          static_cast<size_t>(ens.member_count()), 0.0);
      int len = 0;
      double ret = 0.0;
      while (true) {
        CombineResult c = ens.combine(s);
        int a = sample_action(c.output, rng);
        for (size_t i = 0; i < weight_sum.size(); ++i)
          weight_sum[i] += c.weights[i];
        StepResult step = env.step(a);
        actor_critic_step(ens, *critic, s, a, step.reward, step.observation,
                          step.terminal, cfg);
        ret += step.reward;
        ++len;
        if (step.terminal) break;
        s = std::move(step.observation);
      }
      rec.episode_return = ret;
      rec.length = len;
      rec.mean_weights = std::move(weight_sum);
      for (double& w : rec.mean_weights) w /= static_cast<double>(len);
    }
    if (logger) logger(rec);
    records.push_back(std::move(rec));
    if (stop && stop(records.back())) break;
  }
  return records;
}

}  // namespace a2t
