#include "a2t/environments.hpp"

#include <algorithm>
#include <stdexcept>

namespace a2t {

namespace {

bool in_mask(MaskRegion region, int r, int c, int rows, int cols) {
  int half_r = rows / 2;
  int half_c = cols / 2;
  switch (region) {
    case MaskRegion::None:
      return false;
    case MaskRegion::LowerLeft:
      return r >= half_r && c < half_c;
    case MaskRegion::LowerRight:
      return r >= half_r && c >= half_c;
    case MaskRegion::UpperHalf:
      return r < half_r;
    case MaskRegion::LowerHalf:
      return r >= half_r;
  }
  return false;
}

}  // namespace

void apply_mask(std::vector<double>& obs, MaskRegion region, int rows,
                int cols) {
  if (region == MaskRegion::None) return;
  if (static_cast<int>(obs.size()) < rows * cols)
    throw std::invalid_argument("apply_mask: observation too short");
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (in_mask(region, r, c, rows, cols)) obs[r * cols + c] = 0.0;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  if (cfg_.kind == EnvKind::Puddle && cfg_.puddle_starts.empty())
    cfg_.puddle_starts = {{0, 0}};
  validate();
  if (cfg_.kind == EnvKind::Puddle) {
    penalty_map_.assign(cfg_.rows,
                        std::vector<double>(cfg_.cols, cfg_.step_penalty));
    for (const auto& [r, c, p] : cfg_.penalties) {
      if (r < 0 || r >= cfg_.rows || c < 0 || c >= cfg_.cols)
        throw std::invalid_argument("penalty cell outside grid");
      penalty_map_[r][c] = p;
    }
  }
}

void Environment::validate() const {
  switch (cfg_.kind) {
    case EnvKind::Chain:
      if (cfg_.chain_length < 2)
        throw std::invalid_argument("chain length too small");
      if (cfg_.chain_goal < 0 || cfg_.chain_goal >= cfg_.chain_length)
        throw std::invalid_argument("chain goal outside chain");
      if (cfg_.chain_starts.empty())
        throw std::invalid_argument("empty chain start set");
      for (int s : cfg_.chain_starts)
        if (s < 0 || s >= cfg_.chain_length)
          throw std::invalid_argument("chain start outside chain");
      break;
    case EnvKind::Puddle: {
      if (cfg_.rows < 2 || cfg_.cols < 2)
        throw std::invalid_argument("puddle grid too small");
      auto [gr, gc] = cfg_.puddle_goal;
      if (gr < 0 || gr >= cfg_.rows || gc < 0 || gc >= cfg_.cols)
        throw std::invalid_argument("puddle goal outside grid");
      for (auto [r, c] : cfg_.puddle_starts)
        if (r < 0 || r >= cfg_.rows || c < 0 || c >= cfg_.cols)
          throw std::invalid_argument("puddle start outside grid");
      if (cfg_.slip < 0.0 || cfg_.slip > 1.0)
        throw std::invalid_argument("slip outside [0,1]");
      break;
    }
    case EnvKind::Catch:
      if (cfg_.catch_rows < 2 || cfg_.catch_cols < 2)
        throw std::invalid_argument("catch grid too small");
      break;
  }
  if (cfg_.episode_cap < 1) throw std::invalid_argument("episode cap < 1");
}

int Environment::action_count() const {
  switch (cfg_.kind) {
    case EnvKind::Chain:
      return 2;
    case EnvKind::Puddle:
      return 4;
    case EnvKind::Catch:
      return 3;
  }
  return 0;
}

int Environment::observation_dim() const {
  switch (cfg_.kind) {
    case EnvKind::Chain:
      return cfg_.chain_length;
    case EnvKind::Puddle:
      return cfg_.rows * cfg_.cols;
    case EnvKind::Catch:
      return 2 * cfg_.catch_rows * cfg_.catch_cols;
  }
  return 0;
}

int Environment::state_count() const {
  switch (cfg_.kind) {
    case EnvKind::Chain:
      return cfg_.chain_length;
    case EnvKind::Puddle:
      return cfg_.rows * cfg_.cols;
    case EnvKind::Catch:
      throw std::logic_error("catch states are not enumerable");
  }
  return 0;
}

std::vector<double> Environment::observation_of_state(int state) const {
  if (state < 0 || state >= state_count())
    throw std::out_of_range("state index out of range");
  std::vector<double> obs(observation_dim(), 0.0);
  obs[state] = 1.0;
  return obs;
}

std::vector<double> Environment::raw_observe() const {
  std::vector<double> obs(observation_dim(), 0.0);
  switch (cfg_.kind) {
    case EnvKind::Chain:
      obs[chain_pos_] = 1.0;
      break;
    case EnvKind::Puddle:
      obs[prow_ * cfg_.cols + pcol_] = 1.0;
      break;
    case EnvKind::Catch: {
      int plane = cfg_.catch_rows * cfg_.catch_cols;
      obs[ball_r_ * cfg_.catch_cols + ball_c_] = 1.0;
      obs[plane + (cfg_.catch_rows - 1) * cfg_.catch_cols + paddle_] = 1.0;
      break;
    }
  }
  return obs;
}

std::vector<double> Environment::observe() const {
  if (cfg_.kind == EnvKind::Catch && cfg_.mask != MaskRegion::None)
    return observe_masked();
  return raw_observe();
}

std::vector<double> Environment::observe_masked() const {
  if (cfg_.kind != EnvKind::Catch)
    throw std::logic_error("observe_masked: not a catch environment");
  std::vector<double> obs = raw_observe();
  apply_mask(obs, cfg_.mask, cfg_.catch_rows, cfg_.catch_cols);
  return obs;
}

std::vector<double> Environment::observe_unmasked() const {
  return raw_observe();
}

std::vector<double> Environment::reset() {
  steps_ = 0;
  terminal_ = false;
  switch (cfg_.kind) {
    case EnvKind::Chain: {
      std::uniform_int_distribution<size_t> u(0, cfg_.chain_starts.size() - 1);
      chain_pos_ = cfg_.chain_starts[u(rng_)];
      break;
    }
    case EnvKind::Puddle: {
      std::uniform_int_distribution<size_t> u(0, cfg_.puddle_starts.size() - 1);
      auto [r, c] = cfg_.puddle_starts[u(rng_)];
      prow_ = r;
      pcol_ = c;
      break;
    }
    case EnvKind::Catch: {
      std::uniform_int_distribution<int> uc(0, cfg_.catch_cols - 1);
      ball_r_ = 0;
      ball_c_ = uc(rng_);
      if (cfg_.catch_shifted_drift) {
        std::uniform_int_distribution<int> ud(0, 1);
        drift_ = ud(rng_);
      } else {
        std::uniform_int_distribution<int> ud(-1, 1);
        drift_ = ud(rng_);
      }
      paddle_ = cfg_.catch_cols / 2;
      break;
    }
  }
  return observe();
}

StepResult Environment::step(int action) {
  if (terminal_) throw std::logic_error("step called on terminal episode");
  if (action < 0 || action >= action_count())
    throw std::out_of_range("invalid action");
  ++steps_;
  double reward = 0.0;
  switch (cfg_.kind) {
    case EnvKind::Chain: {
      chain_pos_ += (action == 0) ? -1 : 1;
      chain_pos_ = std::clamp(chain_pos_, 0, cfg_.chain_length - 1);
      if (chain_pos_ == cfg_.chain_goal) {
        reward = 1.0 / steps_;
        terminal_ = true;
      } else if (steps_ >= cfg_.episode_cap) {
        terminal_ = true;
      }
      break;
    }
    case EnvKind::Puddle: {
      int dir = action;
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      if (u01(rng_) < cfg_.slip) {
        std::uniform_int_distribution<int> ud(0, 3);
        dir = ud(rng_);
      }
      static constexpr int dr[4] = {-1, 1, 0, 0};
      static constexpr int dc[4] = {0, 0, 1, -1};
      prow_ = std::clamp(prow_ + dr[dir], 0, cfg_.rows - 1);
      pcol_ = std::clamp(pcol_ + dc[dir], 0, cfg_.cols - 1);
      if (prow_ == cfg_.puddle_goal.first && pcol_ == cfg_.puddle_goal.second) {
        reward = cfg_.goal_reward;
        terminal_ = true;
      } else {
        reward = penalty_map_[prow_][pcol_];
        if (steps_ >= cfg_.episode_cap) terminal_ = true;
      }
      break;
    }
    case EnvKind::Catch: {
      paddle_ = std::clamp(paddle_ + (action - 1), 0, cfg_.catch_cols - 1);
      ball_r_ += 1;
      ball_c_ += drift_;
      if (ball_c_ < 0) {
        ball_c_ = 1;
        drift_ = -drift_;
      } else if (ball_c_ >= cfg_.catch_cols) {
        ball_c_ = cfg_.catch_cols - 2;
        drift_ = -drift_;
      }
      if (ball_r_ >= cfg_.catch_rows - 1) {
        ball_r_ = cfg_.catch_rows - 1;
        reward = (paddle_ == ball_c_) ? 1.0 : -1.0;
        terminal_ = true;
      } else if (steps_ >= cfg_.episode_cap) {
        terminal_ = true;
      }
      break;
    }
  }
  StepResult res;
  res.observation = observe();
  res.reward = reward * cfg_.reward_scale;
  res.terminal = terminal_;
  res.steps = steps_;
  return res;
}

int Environment::ball_landing_col() const {
  if (cfg_.kind != EnvKind::Catch)
    throw std::logic_error("ball_landing_col: not a catch environment");
  int r = ball_r_, c = ball_c_, d = drift_;
  while (r < cfg_.catch_rows - 1) {
    ++r;
    c += d;
    if (c < 0) {
      c = 1;
      d = -d;
    } else if (c >= cfg_.catch_cols) {
      c = cfg_.catch_cols - 2;
      d = -d;
    }
  }
  return c;
}

namespace {

// Two rectangular puddles; border cells -1, interior -2.
void add_puddle_rect(EnvConfig& cfg, int r0, int r1, int c0, int c1) {
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      bool border = (r == r0 || r == r1 || c == c0 || c == c1);
      cfg.penalties.emplace_back(r, c, border ? -1.0 : -2.0);
    }
}

EnvConfig base_puddle(uint64_t seed) {
  EnvConfig cfg;
  cfg.kind = EnvKind::Puddle;
  cfg.rows = 12;
  cfg.cols = 12;
  cfg.puddle_goal = {11, 11};
  cfg.slip = 0.1;
  cfg.step_penalty = -0.05;
  cfg.goal_reward = 10.0;
  cfg.episode_cap = 300;
  cfg.seed = seed;
  add_puddle_rect(cfg, 2, 4, 3, 8);
  add_puddle_rect(cfg, 7, 9, 5, 8);
  return cfg;
}

}  // namespace

EnvConfig chain_world_config(uint64_t seed) {
  EnvConfig cfg;
  cfg.kind = EnvKind::Chain;
  cfg.chain_length = 21;
  cfg.chain_starts = {0, 20};
  cfg.chain_goal = 10;
  cfg.episode_cap = 100;
  cfg.seed = seed;
  return cfg;
}

EnvConfig puddle1_config(uint64_t seed) {
  EnvConfig cfg = base_puddle(seed);
  cfg.puddle_starts = {{0, 0}, {11, 0}, {0, 11}, {0, 5}};
  return cfg;
}

EnvConfig puddle2_config(uint64_t seed) {
  EnvConfig cfg = base_puddle(seed);
  cfg.puddle_starts = {{0, 0}, {11, 0}};
  return cfg;
}

EnvConfig catch_config(MaskRegion mask, uint64_t seed) {
  EnvConfig cfg;
  cfg.kind = EnvKind::Catch;
  cfg.catch_rows = 10;
  cfg.catch_cols = 10;
  cfg.mask = mask;
  cfg.episode_cap = 100;
  cfg.seed = seed;
  return cfg;
}

}  // namespace a2t
