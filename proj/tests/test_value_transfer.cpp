#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "a2t/value_transfer.hpp"
#include "test_util.hpp"

using namespace a2t;
using namespace a2t::testutil;

namespace {

Ensemble value_ensemble(int n_experts, int in, int actions,
                        std::mt19937_64& rng) {
  std::vector<ExpertSlot> slots;
  for (int i = 0; i < n_experts; ++i) {
    ExpertSlot s;
    s.net = make_net({in, 6, actions}, Head::Linear, rng);
    slots.push_back(std::move(s));
  }
  return Ensemble::make(Mode::Value, std::move(slots), true, in, actions, 6,
                        rng);
}

Transition make_transition(std::vector<double> s, int a, double r,
                           std::vector<double> sn, bool terminal) {
  Transition t;
  t.s = std::move(s);
  t.a = a;
  t.r = r;
  t.s_next = std::move(sn);
  t.terminal = terminal;
  return t;
}

}  // namespace

TEST_CASE("replay buffer is FIFO at capacity") {
  std::mt19937_64 rng(1);
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i)
    buf.store(make_transition({double(i)}, 0, 0.0, {0.0}, false), rng);
  CHECK(buf.size() == 3);
  CHECK(buf.contents()[0].s[0] == 2.0);
  CHECK(buf.contents()[1].s[0] == 3.0);
  CHECK(buf.contents()[2].s[0] == 4.0);
}

TEST_CASE("replay buffer keeps nonzero rewards with probability rho") {
  std::mt19937_64 rng(2);
  ReplayBuffer buf(20000, 0.1);
  for (int i = 0; i < 10000; ++i)
    buf.store(make_transition({0.0}, 0, 1.0, {0.0}, true), rng);
  CHECK(buf.size() >= 1000 - 60);
  CHECK(buf.size() <= 1000 + 60);
}

TEST_CASE("replay buffer always keeps zero-reward transitions") {
  std::mt19937_64 rng(3);
  ReplayBuffer buf(5000, 0.1);
  for (int i = 0; i < 3000; ++i)
    buf.store(make_transition({0.0}, 0, 0.0, {0.0}, false), rng);
  CHECK(buf.size() == 3000);
}

TEST_CASE("replay buffer rejects bad arguments and empty sampling") {
  std::mt19937_64 rng(4);
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
  CHECK_THROWS_AS(ReplayBuffer(10, 1.5), std::invalid_argument);
  ReplayBuffer buf(10);
  CHECK_THROWS_AS(buf.sample(rng), std::logic_error);
}

TEST_CASE("act_epsilon_greedy: greedy action, lowest-index tie break") {
  std::mt19937_64 rng(5);
  // base with fixed logits (0, 2, 2): argmax ties between 1 and 2
  std::vector<ExpertSlot> none;
  Net base;
  base.head = Head::Linear;
  Layer l;
  l.in = 2;
  l.out = 3;
  l.w.assign(6, 0.0);
  l.b = {0.0, 2.0, 2.0};
  base.layers.push_back(std::move(l));
  Net att = make_net({2, 4, 1}, Head::Softmax, rng);
  Ensemble ens(Mode::Value, none, base, att);
  std::vector<double> s = {0.3, 0.7};
  for (int i = 0; i < 20; ++i)
    CHECK(act_epsilon_greedy(ens, s, 0.0, rng) == 1);
}

TEST_CASE("act_epsilon_greedy explores uniformly at eps=1") {
  std::mt19937_64 rng(6);
  Ensemble ens = value_ensemble(1, 2, 3, rng);
  std::vector<double> s = {0.1, 0.2};
  std::vector<int> counts(3, 0);
  const int trials = 30000;
  for (int i = 0; i < trials; ++i)
    ++counts[act_epsilon_greedy(ens, s, 1.0, rng)];
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(counts[a] / double(trials) - 1.0 / 3) < 0.02);
}

TEST_CASE("act_epsilon_greedy requires value mode") {
  std::mt19937_64 rng(7);
  std::vector<ExpertSlot> slots(1);
  slots[0].net = make_net({2, 4, 3}, Head::Softmax, rng);
  Ensemble ens =
      Ensemble::make(Mode::Policy, std::move(slots), true, 2, 3, 4, rng);
  CHECK_THROWS_AS(act_epsilon_greedy(ens, std::vector<double>{0.0, 0.0}, 0.0,
                                     rng),
                  std::logic_error);
}

TEST_CASE("clip_reward clamps to [-1, 1]") {
  CHECK(clip_reward(3.0) == 1.0);
  CHECK(clip_reward(-2.5) == -1.0);
  CHECK(clip_reward(0.4) == 0.4);
}

TEST_CASE("q_target: terminal transitions use the reward alone") {
  std::mt19937_64 rng(8);
  Ensemble ens = value_ensemble(1, 2, 2, rng);
  TargetPair targets = make_targets(ens, 100);
  Transition t = make_transition({0.1, 0.2}, 0, 5.0, {0.3, 0.4}, true);
  CHECK(q_target(ens, targets, t, 0.9, false) == doctest::Approx(5.0));
  CHECK(q_target(ens, targets, t, 0.9, true) == doctest::Approx(1.0));
}

TEST_CASE("q_target bootstraps with the max combined Q at s'") {
  std::mt19937_64 rng(9);
  Ensemble ens = value_ensemble(2, 3, 2, rng);
  TargetPair targets = make_targets(ens, 100);
  Transition t = make_transition(random_vector(3, rng), 1, 0.5,
                                 random_vector(3, rng), false);
  CombineResult c = ens.combine(t.s_next);
  double best = std::max(c.output[0], c.output[1]);
  CHECK(q_target(ens, targets, t, 0.9, false) ==
        doctest::Approx(0.5 + 0.9 * best));
}

TEST_CASE("q_target uses the frozen target parameters, not the online ones") {
  std::mt19937_64 rng(10);
  Ensemble ens = value_ensemble(1, 3, 2, rng);
  TargetPair targets = make_targets(ens, 100);
  Transition t = make_transition(random_vector(3, rng), 0, 0.0,
                                 random_vector(3, rng), false);
  double before = q_target(ens, targets, t, 0.9, false);
  // large online perturbation must not move the target
  for (Layer& l : ens.mutable_base().layers)
    for (double& w : l.w) w += 1.0;
  for (Layer& l : ens.mutable_attention().layers)
    for (double& w : l.w) w += 1.0;
  CHECK(q_target(ens, targets, t, 0.9, false) == doctest::Approx(before));
  sync_targets(targets, ens);
  CHECK(q_target(ens, targets, t, 0.9, false) != doctest::Approx(before));
}

TEST_CASE("learn_step is a no-op below the learn-start threshold") {
  std::mt19937_64 rng(11);
  Ensemble ens = value_ensemble(1, 2, 2, rng);
  TargetPair targets = make_targets(ens, 100);
  ValueTrainConfig cfg;
  cfg.learn_start = 10;
  cfg.batch_size = 4;
  ReplayBuffer buf(100);
  for (int i = 0; i < 5; ++i)
    buf.store(make_transition({0.0, 1.0}, 0, 0.0, {1.0, 0.0}, false), rng);
  Optimizer oa = make_rmsprop(cfg.learning_rate);
  Optimizer ob = make_rmsprop(cfg.learning_rate);
  std::vector<double> att = flatten(ens.attention());
  CHECK_FALSE(learn_step(ens, targets, buf, cfg, oa, ob, rng));
  CHECK(flatten(ens.attention()) == att);
  CHECK(targets.learn_steps == 0);
}

TEST_CASE("learn_step updates theta_a and theta_b but never the experts") {
  std::mt19937_64 rng(12);
  Ensemble ens = value_ensemble(2, 2, 2, rng);
  TargetPair targets = make_targets(ens, 1000);
  ValueTrainConfig cfg;
  cfg.learn_start = 1;
  cfg.batch_size = 4;
  ReplayBuffer buf(100);
  for (int i = 0; i < 8; ++i)
    buf.store(make_transition({0.0, 1.0}, i % 2, 1.0, {1.0, 0.0}, true), rng);
  Optimizer oa = make_rmsprop(0.01);
  Optimizer ob = make_rmsprop(0.01);
  std::vector<double> att = flatten(ens.attention());
  std::vector<double> base = flatten(ens.base());
  CHECK(learn_step(ens, targets, buf, cfg, oa, ob, rng));
  CHECK(flatten(ens.attention()) != att);
  CHECK(flatten(ens.base()) != base);
  CHECK_FALSE(ens.freeze_check().has_value());
  CHECK(targets.learn_steps == 1);
}

TEST_CASE("learn_step syncs the targets every sync_period learn steps") {
  std::mt19937_64 rng(13);
  Ensemble ens = value_ensemble(1, 2, 2, rng);
  TargetPair targets = make_targets(ens, 3);
  ValueTrainConfig cfg;
  cfg.learn_start = 1;
  cfg.batch_size = 2;
  cfg.sync_period = 3;
  ReplayBuffer buf(100);
  for (int i = 0; i < 4; ++i)
    buf.store(make_transition({0.0, 1.0}, 0, 1.0, {1.0, 0.0}, true), rng);
  Optimizer oa = make_rmsprop(0.01);
  Optimizer ob = make_rmsprop(0.01);
  learn_step(ens, targets, buf, cfg, oa, ob, rng);
  learn_step(ens, targets, buf, cfg, oa, ob, rng);
  CHECK(net_bytes(targets.attention) != net_bytes(ens.attention()));
  learn_step(ens, targets, buf, cfg, oa, ob, rng);
  CHECK(net_bytes(targets.attention) == net_bytes(ens.attention()));
  CHECK(net_bytes(targets.base) == net_bytes(ens.base()));
}

TEST_CASE("repeated learn steps shrink the Bellman residual") {
  std::mt19937_64 rng(14);
  Ensemble ens = value_ensemble(1, 2, 2, rng);
  TargetPair targets = make_targets(ens, 1000000);
  ValueTrainConfig cfg;
  cfg.learn_start = 1;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.01;
  ReplayBuffer buf(10);
  Transition t = make_transition({0.0, 1.0}, 1, 1.0, {1.0, 0.0}, true);
  buf.store(Transition(t), rng);
  buf.store(Transition(t), rng);
  Optimizer oa = make_rmsprop(cfg.learning_rate);
  Optimizer ob = make_rmsprop(cfg.learning_rate);
  auto residual = [&] {
    double q = ens.combine(t.s).output[1];
    return std::abs(1.0 - q);
  };
  double before = residual();
  for (int i = 0; i < 1500; ++i)
    learn_step(ens, targets, buf, cfg, oa, ob, rng);
  CHECK(residual() < before);
  CHECK(residual() < 0.05);
}

TEST_CASE("evaluate_value counts completed episodes on the chain") {
  std::mt19937_64 rng(15);
  EnvConfig ecfg = chain_world_config(15);
  ecfg.chain_starts = {9};  // one greedy-right step from the goal
  Environment env(ecfg);
  // base that always prefers action 1 (right)
  std::vector<ExpertSlot> none;
  Net base;
  base.head = Head::Linear;
  Layer l;
  l.in = env.observation_dim();
  l.out = 2;
  l.w.assign(static_cast<size_t>(l.in) * 2, 0.0);
  l.b = {0.0, 1.0};
  base.layers.push_back(std::move(l));
  std::mt19937_64 nr(1);
  Net att = make_net({env.observation_dim(), 4, 1}, Head::Softmax, nr);
  Ensemble ens(Mode::Value, none, base, att);
  auto [mean, episodes] = evaluate_value(ens, env, 0.0, 50, rng);
  CHECK(episodes == 50);  // every episode is one step
  CHECK(mean == doctest::Approx(1.0));  // reward 1/steps with steps=1
}

TEST_CASE("train_value epoch bookkeeping, annealing, and early stop") {
  std::mt19937_64 rng(16);
  EnvConfig ecfg = chain_world_config(16);
  ecfg.episode_cap = 10;
  Environment env(ecfg);
  Ensemble ens = value_ensemble(1, env.observation_dim(), 2, rng);
  ValueTrainConfig cfg;
  cfg.steps_per_epoch = 100;
  cfg.eval_steps = 30;
  cfg.learn_start = 32;
  cfg.eps_anneal_steps = 200;
  cfg.replay_capacity = 500;
  std::vector<EpochStats> hist = train_value(ens, env, cfg, 3, rng);
  REQUIRE(hist.size() == 3);
  for (int e = 0; e < 3; ++e) {
    CHECK(hist[e].epoch == e);
    CHECK(hist[e].eval_episodes > 0);
    double wsum = 0.0;
    for (double w : hist[e].mean_weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
  }
  // last step of epoch 0 is global step 99 of a 200-step anneal 1.0 -> 0.1
  CHECK(hist[0].eps == doctest::Approx(1.0 + 99.0 / 200.0 * (0.1 - 1.0)));
  CHECK(hist[1].eps == doctest::Approx(1.0 + 199.0 / 200.0 * (0.1 - 1.0)));
  CHECK(hist[2].eps == doctest::Approx(0.1));

  std::vector<EpochStats> stopped = train_value(
      ens, env, cfg, 10, rng, nullptr,
      [](const EpochStats& s) { return s.epoch >= 1; });
  CHECK(stopped.size() == 2);
}

TEST_CASE("train_dqn_expert returns a correctly shaped value net") {
  std::mt19937_64 rng(17);
  EnvConfig ecfg = chain_world_config(17);
  Environment env(ecfg);
  ValueTrainConfig cfg;
  cfg.hidden = 8;
  cfg.steps_per_epoch = 50;
  cfg.eval_steps = 20;
  cfg.learn_start = 16;
  cfg.batch_size = 8;
  cfg.replay_capacity = 200;
  Net net = train_dqn_expert(env, cfg, 1, rng);
  CHECK(net.input_dim() == env.observation_dim());
  CHECK(net.output_dim() == env.action_count());
  CHECK(net.head == Head::Linear);
}
