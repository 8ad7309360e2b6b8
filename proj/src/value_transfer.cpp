#include "a2t/value_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace a2t {

ReplayBuffer::ReplayBuffer(size_t capacity, double rho)
    : capacity_(capacity), rho_(rho) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity is zero");
  if (rho_ < 0.0 || rho_ > 1.0)
    throw std::invalid_argument("rho outside [0,1]");
}

void ReplayBuffer::store(Transition t, std::mt19937_64& rng) {
  if (t.r != 0.0 && rho_ < 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) >= rho_) return;
  }
  if (queue_.size() == capacity_) queue_.pop_front();
  queue_.push_back(std::move(t));
}

const Transition& ReplayBuffer::sample(std::mt19937_64& rng) const {
  if (queue_.empty()) throw std::logic_error("sampling from empty buffer");
  std::uniform_int_distribution<size_t> u(0, queue_.size() - 1);
  return queue_[u(rng)];
}

TargetPair make_targets(const Ensemble& ens, int sync_period) {
  TargetPair t;
  t.attention = ens.attention();
  t.has_base = ens.has_base();
  if (t.has_base) t.base = ens.base();
  t.sync_period = sync_period;
  return t;
}

void sync_targets(TargetPair& targets, const Ensemble& ens) {
  targets.attention = ens.attention();
  if (targets.has_base) targets.base = ens.base();
}

int act_epsilon_greedy(const Ensemble& ens, std::span<const double> s,
                       double eps, std::mt19937_64& rng) {
  if (ens.mode() != Mode::Value)
    throw std::logic_error("act_epsilon_greedy: value mode required");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < eps) {
    std::uniform_int_distribution<int> ua(0, ens.action_count() - 1);
    return ua(rng);
  }
  std::vector<double> q = ens.combine(s).output;
  int best = 0;
  for (size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = static_cast<int>(a);
  return best;
}

double clip_reward(double r) { return std::clamp(r, -1.0, 1.0); }

double q_target(const Ensemble& ens, const TargetPair& targets,
                const Transition& t, double gamma, bool clip) {
  double r = clip ? clip_reward(t.r) : t.r;
  if (t.terminal) return r;
  CombineResult c = ens.combine_with(
      targets.attention, targets.has_base ? &targets.base : nullptr, t.s_next);
  double best = c.output[0];
  for (double q : c.output) best = std::max(best, q);
  return r + gamma * best;
}

bool learn_step(Ensemble& ens, TargetPair& targets, ReplayBuffer& buffer,
                const ValueTrainConfig& cfg, Optimizer& opt_attention,
                Optimizer& opt_base, std::mt19937_64& rng) {
  if (buffer.size() < static_cast<size_t>(cfg.learn_start) ||
      buffer.size() < static_cast<size_t>(cfg.batch_size))
    return false;
  Gradient ga = zero_gradient(ens.attention());
  Gradient gb =
      ens.has_base() ? zero_gradient(ens.base()) : Gradient{};
  for (int k = 0; k < cfg.batch_size; ++k) {
    const Transition& t = buffer.sample(rng);
    double y = q_target(ens, targets, t, cfg.gamma, cfg.clip_rewards);
    add_gradient(ga, ens.grad_attention_qloss(t.s, t.a, y));
    if (ens.has_base()) {
      // Base loss (y - Q_B(s,a))^2 with the shared Q_T target.
      std::vector<double> qb = forward(ens.base(), t.s);
      std::vector<double> upstream(qb.size(), 0.0);
      upstream[static_cast<size_t>(t.a)] =
          -(y - qb[static_cast<size_t>(t.a)]);
      add_gradient(gb, backward(ens.base(), t.s, upstream));
    }
  }
  double inv = 1.0 / cfg.batch_size;
  scale_gradient(ga, inv);
  apply_update(ens.mutable_attention(), ga, opt_attention, /*ascent=*/false);
  if (ens.has_base()) {
    scale_gradient(gb, inv);
    apply_update(ens.mutable_base(), gb, opt_base, /*ascent=*/false);
  }
  ++targets.learn_steps;
  if (targets.learn_steps % targets.sync_period == 0)
    sync_targets(targets, ens);
  return true;
}

std::pair<double, int> evaluate_value(const Ensemble& ens, Environment& env,
                                      double eps, int step_budget,
                                      std::mt19937_64& rng) {
  double total = 0.0;
  int episodes = 0;
  int steps = 0;
  while (steps < step_budget) {
    std::vector<double> s = env.reset();
    double ret = 0.0;
    while (true) {
      int a = act_epsilon_greedy(ens, s, eps, rng);
      StepResult st = env.step(a);
      ret += st.reward;
      ++steps;
      if (st.terminal) break;
      s = std::move(st.observation);
    }
    total += ret;
    ++episodes;
  }
  return {episodes ? total / episodes : 0.0, episodes};
}

std::vector<EpochStats> train_value(Ensemble& ens, Environment& env,
                                    const ValueTrainConfig& cfg, int epochs,
                                    std::mt19937_64& rng,
                                    const ValueLogger& logger,
                                    const StopPredicate& stop) {
  if (ens.mode() != Mode::Value)
    throw std::logic_error("train_value: value mode required");
  ReplayBuffer buffer(cfg.replay_capacity, cfg.rho);
  TargetPair targets = make_targets(ens, cfg.sync_period);
  Optimizer opt_a = make_rmsprop(
      cfg.lr_attention > 0.0 ? cfg.lr_attention : cfg.learning_rate,
      cfg.rms_decay, cfg.rms_epsilon);
  Optimizer opt_b =
      make_rmsprop(cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon);
  Environment eval_env(
      [&] {
        EnvConfig e = env.config();
        e.seed = env.config().seed + 0x9e3779b9ull;
        return e;
      }());

  std::vector<EpochStats> history;
  long global_step = 0;
  std::vector<double> s = env.reset();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<double> weight_sum(static_cast<size_t>(ens.member_count()),
                                   0.0);
    double eps = cfg.eps_start;
    for (int step = 0; step < cfg.steps_per_epoch; ++step, ++global_step) {
      double frac = cfg.eps_anneal_steps > 0
                        ? std::min(1.0, static_cast<double>(global_step) /
                                            cfg.eps_anneal_steps)
                        : 1.0;
      eps = cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start);
      int a = act_epsilon_greedy(ens, s, eps, rng);
      for (size_t i = 0; i < weight_sum.size(); ++i)
        weight_sum[i] += ens.attend(s)[i];
      StepResult st = env.step(a);
      Transition t;
      t.s = s;
      t.a = a;
      t.r = st.reward;
      t.s_next = st.observation;
      t.terminal = st.terminal;
      buffer.store(std::move(t), rng);
      s = st.terminal ? env.reset() : std::move(st.observation);
      if (global_step % cfg.learn_every == 0)
        learn_step(ens, targets, buffer, cfg, opt_a, opt_b, rng);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.eps = eps;
    stats.mean_weights = weight_sum;
    for (double& w : stats.mean_weights) w /= cfg.steps_per_epoch;
    auto [mean, eps_count] =
        evaluate_value(ens, eval_env, cfg.eval_eps, cfg.eval_steps, rng);
    stats.eval_mean_score = mean;
    stats.eval_episodes = eps_count;
    if (logger) logger(stats);
    history.push_back(stats);
    if (stop && stop(stats)) break;
  }
  return history;
}

Net train_dqn_expert(Environment& env, const ValueTrainConfig& cfg, int epochs,
                     std::mt19937_64& rng, const StopPredicate& stop) {
  Ensemble ens = Ensemble::make(Mode::Value, {}, /*with_base=*/true,
                                env.observation_dim(), env.action_count(),
                                cfg.hidden, rng);
  if (epochs > 0) train_value(ens, env, cfg, epochs, rng, nullptr, stop);
  return ens.base();
}

}  // namespace a2t
