#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "a2t/environments.hpp"

using namespace a2t;

namespace {

int argmax_index(const std::vector<double>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

TEST_CASE("chain reset draws uniformly from the start set") {
  EnvConfig cfg = chain_world_config(123);
  Environment env(cfg);
  std::map<int, int> counts;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> obs = env.reset();
    int state = argmax_index(obs);
    CHECK((state == 0 || state == 20));
    ++counts[state];
  }
  CHECK(std::abs(counts[0] / 10000.0 - 0.5) < 0.02);
  CHECK(std::abs(counts[20] / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("chain: single-element start set is degenerate") {
  EnvConfig cfg = chain_world_config(1);
  cfg.chain_starts = {5};
  Environment env(cfg);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> obs = env.reset();
    CHECK(obs[5] == 1.0);
  }
}

TEST_CASE("chain reward is 1/steps at the goal, 0 elsewhere") {
  EnvConfig cfg = chain_world_config(2);
  cfg.chain_starts = {0};
  Environment env(cfg);
  env.reset();
  for (int step = 1; step <= 9; ++step) {
    StepResult r = env.step(1);
    CHECK(r.reward == 0.0);
    CHECK_FALSE(r.terminal);
  }
  StepResult r = env.step(1);  // 10th step reaches state 10
  CHECK(r.terminal);
  CHECK(r.reward == doctest::Approx(0.1));
}

TEST_CASE("chain clips at the ends and terminates at the cap with 0 reward") {
  EnvConfig cfg = chain_world_config(3);
  cfg.chain_starts = {0};
  cfg.episode_cap = 5;
  Environment env(cfg);
  env.reset();
  StepResult r{};
  for (int i = 0; i < 5; ++i) r = env.step(0);  // push left into the wall
  CHECK(r.terminal);
  CHECK(r.reward == 0.0);
  CHECK(r.observation[0] == 1.0);
  CHECK_THROWS_AS(env.step(0), std::logic_error);
}

TEST_CASE("puddle: goal-adjacent move with slip=0 pays +10 and terminates") {
  EnvConfig cfg = puddle1_config(4);
  cfg.slip = 0.0;
  cfg.puddle_starts = {{11, 10}};
  Environment env(cfg);
  env.reset();
  StepResult r = env.step(2);  // east into (11,11)
  CHECK(r.terminal);
  CHECK(r.reward == doctest::Approx(10.0));
}

TEST_CASE("puddle transition frequencies follow the 0.9/0.1 slip model") {
  EnvConfig cfg = puddle1_config(5);
  cfg.puddle_starts = {{5, 2}};  // interior, outside the puddles
  Environment env(cfg);
  std::map<std::pair<int, int>, int> moves;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    env.reset();
    StepResult r = env.step(2);  // east
    int idx = argmax_index(r.observation);
    moves[{idx / cfg.cols, idx % cfg.cols}]++;
  }
  double east = moves[{5, 3}] / static_cast<double>(trials);
  double north = moves[{4, 2}] / static_cast<double>(trials);
  double south = moves[{6, 2}] / static_cast<double>(trials);
  double west = moves[{5, 1}] / static_cast<double>(trials);
  CHECK(std::abs(east - 0.925) < 0.005);
  CHECK(std::abs(north - 0.025) < 0.005);
  CHECK(std::abs(south - 0.025) < 0.005);
  CHECK(std::abs(west - 0.025) < 0.005);
}

TEST_CASE("puddle: non-goal steps pay the penalty map") {
  EnvConfig cfg = puddle1_config(6);
  cfg.slip = 0.0;
  cfg.puddle_starts = {{0, 0}};
  Environment env(cfg);
  env.reset();
  StepResult r = env.step(1);  // south to (1,0): plain cell
  CHECK(r.reward == doctest::Approx(-0.05));
  // (2,3) is a puddle border cell
  EnvConfig cfg2 = puddle1_config(6);
  cfg2.slip = 0.0;
  cfg2.puddle_starts = {{2, 2}};
  Environment env2(cfg2);
  env2.reset();
  StepResult r2 = env2.step(2);  // east into (2,3)
  CHECK(r2.reward == doctest::Approx(-1.0));
}

TEST_CASE("catch: paddle under the ball at the final row pays +1") {
  EnvConfig cfg = catch_config(MaskRegion::None, 7);
  Environment env(cfg);
  for (int episode = 0; episode < 50; ++episode) {
    env.reset();
    int target = env.ball_landing_col();
    StepResult r{};
    bool done = false;
    while (!done) {
      // re-aim every step; drift can bounce but landing stays fixed
      target = env.ball_landing_col();
      int paddle_now = -1;
      std::vector<double> obs = env.observe_unmasked();
      int plane = cfg.catch_rows * cfg.catch_cols;
      for (int c = 0; c < cfg.catch_cols; ++c)
        if (obs[plane + (cfg.catch_rows - 1) * cfg.catch_cols + c] == 1.0)
          paddle_now = c;
      int a = (target > paddle_now) ? 2 : (target < paddle_now ? 0 : 1);
      r = env.step(a);
      done = r.terminal;
    }
    CHECK(r.reward == doctest::Approx(1.0));
  }
}

TEST_CASE("catch observation dims and masking") {
  EnvConfig cfg = catch_config(MaskRegion::LowerLeft, 8);
  Environment env(cfg);
  CHECK(env.observation_dim() == 200);
  CHECK(env.action_count() == 3);

  env.reset();
  // drive ball into the lower half
  for (int i = 0; i < 6 && !env.terminal(); ++i) env.step(1);
  std::vector<double> full = env.observe_unmasked();
  std::vector<double> masked = env.observe_masked();
  int plane = cfg.catch_rows * cfg.catch_cols;
  int ball = argmax_index({full.begin(), full.begin() + plane});
  int r = ball / cfg.catch_cols, c = ball % cfg.catch_cols;
  bool in_lower_left = r >= cfg.catch_rows / 2 && c < cfg.catch_cols / 2;
  double masked_ball_sum = 0.0;
  for (int i = 0; i < plane; ++i) masked_ball_sum += masked[i];
  if (in_lower_left)
    CHECK(masked_ball_sum == 0.0);
  else
    CHECK(masked == full);
  // paddle plane never masked
  for (int i = plane; i < 2 * plane; ++i) CHECK(masked[i] == full[i]);
}

TEST_CASE("mask None is the identity; masked on non-catch env throws") {
  EnvConfig cfg = catch_config(MaskRegion::None, 9);
  Environment env(cfg);
  env.reset();
  CHECK(env.observe_masked() == env.observe_unmasked());
  Environment chain(chain_world_config(9));
  chain.reset();
  CHECK_THROWS_AS(chain.observe_masked(), std::logic_error);
}

TEST_CASE("masking never changes dynamics or rewards") {
  EnvConfig plain = catch_config(MaskRegion::None, 77);
  EnvConfig masked = catch_config(MaskRegion::LowerHalf, 77);
  Environment a(plain), b(masked);
  for (int episode = 0; episode < 20; ++episode) {
    a.reset();
    b.reset();
    CHECK(a.observe_unmasked() == b.observe_unmasked());
    bool done = false;
    int t = 0;
    while (!done) {
      int action = (t++ * 7) % 3;  // shared action script
      StepResult ra = a.step(action);
      StepResult rb = b.step(action);
      CHECK(ra.reward == rb.reward);
      CHECK(ra.terminal == rb.terminal);
      CHECK(a.observe_unmasked() == b.observe_unmasked());
      done = ra.terminal;
    }
  }
}

TEST_CASE("action counts per environment kind") {
  CHECK(Environment(chain_world_config()).action_count() == 2);
  CHECK(Environment(puddle1_config()).action_count() == 4);
  CHECK(Environment(catch_config()).action_count() == 3);
}

TEST_CASE("environments replay deterministically under a fixed seed") {
  for (const EnvConfig& cfg :
       {chain_world_config(31), puddle2_config(31), catch_config(MaskRegion::None, 31)}) {
    Environment a(cfg), b(cfg);
    for (int episode = 0; episode < 5; ++episode) {
      std::vector<double> oa = a.reset(), ob = b.reset();
      CHECK(oa == ob);
      bool done = false;
      int t = 0;
      while (!done) {
        int action = (t++ * 13) % a.action_count();
        StepResult ra = a.step(action);
        StepResult rb = b.step(action);
        CHECK(ra.observation == rb.observation);
        CHECK(ra.reward == rb.reward);
        CHECK(ra.terminal == rb.terminal);
        done = ra.terminal;
      }
    }
  }
}

TEST_CASE("invalid configurations are rejected") {
  EnvConfig cfg = chain_world_config();
  cfg.chain_goal = 99;
  CHECK_THROWS_AS(Environment{cfg}, std::invalid_argument);
  EnvConfig p = puddle1_config();
  p.puddle_goal = {50, 0};
  CHECK_THROWS_AS(Environment{p}, std::invalid_argument);
  EnvConfig s = puddle1_config();
  s.slip = 1.5;
  CHECK_THROWS_AS(Environment{s}, std::invalid_argument);
}
