#include "a2t/experts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "a2t/config.hpp"

namespace a2t {

namespace fs = std::filesystem;

std::string to_string(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::Favorable:
      return "favorable";
    case ExpertKind::Partial:
      return "partial";
    case ExpertKind::NegatedTopLayer:
      return "negated_top_layer";
    case ExpertKind::InverseReward:
      return "inverse_reward";
    case ExpertKind::Masked:
      return "masked";
  }
  return "?";
}

ExpertKind expert_kind_from_string(const std::string& s) {
  if (s == "favorable") return ExpertKind::Favorable;
  if (s == "partial") return ExpertKind::Partial;
  if (s == "negated_top_layer") return ExpertKind::NegatedTopLayer;
  if (s == "inverse_reward") return ExpertKind::InverseReward;
  if (s == "masked") return ExpertKind::Masked;
  throw std::runtime_error("unknown expert kind: " + s);
}

std::string to_string(MaskRegion region) {
  switch (region) {
    case MaskRegion::None:
      return "none";
    case MaskRegion::LowerLeft:
      return "lower_left";
    case MaskRegion::LowerRight:
      return "lower_right";
    case MaskRegion::UpperHalf:
      return "upper_half";
    case MaskRegion::LowerHalf:
      return "lower_half";
  }
  return "?";
}

MaskRegion mask_region_from_string(const std::string& s) {
  if (s == "none") return MaskRegion::None;
  if (s == "lower_left") return MaskRegion::LowerLeft;
  if (s == "lower_right") return MaskRegion::LowerRight;
  if (s == "upper_half") return MaskRegion::UpperHalf;
  if (s == "lower_half") return MaskRegion::LowerHalf;
  throw std::runtime_error("unknown mask region: " + s);
}

std::string to_string(Mode mode) {
  return mode == Mode::Policy ? "policy" : "value";
}

Mode mode_from_string(const std::string& s) {
  if (s == "policy") return Mode::Policy;
  if (s == "value") return Mode::Value;
  throw std::runtime_error("unknown mode: " + s);
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Chain:
      return "chain";
    case EnvKind::Puddle:
      return "puddle";
    case EnvKind::Catch:
      return "catch";
  }
  return "?";
}

EnvKind env_kind_from_string(const std::string& s) {
  if (s == "chain") return EnvKind::Chain;
  if (s == "puddle") return EnvKind::Puddle;
  if (s == "catch") return EnvKind::Catch;
  throw std::runtime_error("unknown env kind: " + s);
}

namespace {

Net negate_top_layer(Net net) {
  Layer& top = net.layers.back();
  for (double& v : top.w) v = -v;
  for (double& v : top.b) v = -v;
  return net;
}

Net train_policy_expert(const ExpertSpec& spec, std::mt19937_64& rng) {
  Environment env(spec.env);
  Ensemble ens = Ensemble::make(Mode::Policy, {}, /*with_base=*/true,
                                env.observation_dim(), env.action_count(), 32,
                                rng);
  CriticState critic;
  CriticState* critic_ptr = nullptr;
  PolicyTrainConfig cfg = spec.policy_cfg;
  if (cfg.algorithm == PolicyAlgorithm::ActorCritic) {
    critic = make_critic(env.observation_dim(), 32, cfg.gamma, cfg.lr_critic,
                         rng);
    critic_ptr = &critic;
  }
  train_policy(ens, env, cfg, spec.budget, rng, nullptr, critic_ptr);
  return ens.base();
}

Net train_value_expert(const ExpertSpec& spec, std::mt19937_64& rng) {
  Environment env(spec.env);
  return train_dqn_expert(env, spec.value_cfg, spec.budget, rng);
}

}  // namespace

ExpertRecord build_expert(const ExpertSpec& spec, const ExpertRecord* donor) {
  ExpertRecord rec;
  rec.spec = spec;
  std::mt19937_64 rng(spec.seed);

  if (spec.kind == ExpertKind::NegatedTopLayer) {
    if (donor == nullptr)
      throw std::invalid_argument("negated_top_layer expert needs a donor");
    rec.net = negate_top_layer(donor->net);
  } else {
    ExpertSpec train_spec = spec;
    if (spec.kind == ExpertKind::Masked) {
      if (spec.env.kind != EnvKind::Catch)
        throw std::invalid_argument("masked expert requires a catch env");
      train_spec.env.mask = spec.mask;
    }
    if (spec.kind == ExpertKind::InverseReward)
      train_spec.env.reward_scale = -spec.env.reward_scale;
    rec.net = (spec.mode == Mode::Policy) ? train_policy_expert(train_spec, rng)
                                          : train_value_expert(train_spec, rng);
  }

  // Evaluation on the (unscaled-reward) source env.
  EnvConfig eval_env_cfg = rec.spec.env;
  eval_env_cfg.reward_scale = 1.0;
  eval_env_cfg.seed = spec.seed + 1;
  if (spec.kind == ExpertKind::Masked) eval_env_cfg.mask = spec.mask;
  Environment eval_env(eval_env_cfg);
  rec.checksum = net_checksum(rec.net);
  std::mt19937_64 eval_rng(spec.seed + 2);
  rec.eval_score = evaluate_expert(rec, eval_env, 100, eval_rng).mean;
  return rec;
}

ExpertEval evaluate_expert(const ExpertRecord& rec, Environment& env,
                           int episodes, std::mt19937_64& rng) {
  if (episodes <= 0)
    throw std::invalid_argument("evaluate_expert: need at least one episode");
  if (rec.net.input_dim() != env.observation_dim())
    throw std::invalid_argument(
        "evaluate_expert: network/environment dimension mismatch");
  ExpertEval eval;
  double total = 0.0, left = 0.0, right = 0.0;
  bool is_catch = env.config().kind == EnvKind::Catch;
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<double> s = env.reset();
    bool lands_left = false;
    if (is_catch)
      lands_left = env.ball_landing_col() < env.config().catch_cols / 2;
    double ret = 0.0;
    while (true) {
      std::vector<double> out = forward(rec.net, s);
      int a;
      if (rec.spec.mode == Mode::Policy) {
        a = sample_action(out, rng);
      } else {
        a = 0;
        for (size_t i = 1; i < out.size(); ++i)
          if (out[i] > out[a]) a = static_cast<int>(i);
      }
      StepResult st = env.step(a);
      ret += st.reward;
      if (st.terminal) break;
      s = std::move(st.observation);
    }
    total += ret;
    if (is_catch) {
      if (lands_left) {
        left += ret;
        ++eval.left_episodes;
      } else {
        right += ret;
        ++eval.right_episodes;
      }
    }
  }
  eval.mean = total / episodes;
  eval.episodes = episodes;
  if (eval.left_episodes) eval.left_mean = left / eval.left_episodes;
  if (eval.right_episodes) eval.right_mean = right / eval.right_episodes;
  return eval;
}

Net optimal_chain_policy(int length, int goal) {
  // Single linear layer on the one-hot state: logits favor the action that
  // moves toward the goal.
  Net net;
  net.head = Head::Softmax;
  Layer l;
  l.in = length;
  l.out = 2;
  l.w.assign(static_cast<size_t>(length) * 2, 0.0);
  l.b.assign(2, 0.0);
  constexpr double kSaturate = 50.0;
  for (int s = 0; s < length; ++s) {
    // action 0 = left, action 1 = right
    double toward_right = (s < goal) ? kSaturate : -kSaturate;
    l.w[0 * static_cast<size_t>(length) + s] = -toward_right;
    l.w[1 * static_cast<size_t>(length) + s] = toward_right;
  }
  net.layers.push_back(std::move(l));
  return net;
}

void save_expert(const ExpertRecord& rec, const std::string& dir) {
  fs::create_directories(dir);
  save_net_file(rec.net, dir + "/model.a2t");

  Config cfg;
  cfg.set("expert", "name", rec.spec.name);
  cfg.set("expert", "kind", to_string(rec.spec.kind));
  cfg.set("expert", "mode", to_string(rec.spec.mode));
  cfg.set("expert", "mask", to_string(rec.spec.mask));
  cfg.set_int("expert", "budget", rec.spec.budget);
  cfg.set_int("expert", "seed", static_cast<long>(rec.spec.seed));
  cfg.set_double("expert", "eval_score", rec.eval_score);
  cfg.set("expert", "checksum", std::to_string(rec.checksum));
  write_env_config(cfg, "env", rec.spec.env);
  cfg.write_file(dir + "/spec.cfg");

  std::ofstream eval(dir + "/eval.csv");
  eval << "metric,value\n";
  eval << "eval_score," << rec.eval_score << "\n";
}

ExpertRecord load_expert(const std::string& dir) {
  std::string model_path = dir + "/model.a2t";
  if (!fs::exists(model_path))
    throw std::runtime_error("expert model file missing: " + model_path);
  std::string spec_path = dir + "/spec.cfg";
  if (!fs::exists(spec_path))
    throw std::runtime_error("expert spec file missing: " + spec_path);

  ExpertRecord rec;
  rec.net = load_net_file(model_path);
  Config cfg = Config::parse_file(spec_path);
  cfg.require_keys("expert", {"name", "kind", "mode", "mask", "budget", "seed",
                              "eval_score", "checksum"});
  rec.spec.name = cfg.get_or("expert", "name", "");
  rec.spec.kind = expert_kind_from_string(cfg.get("expert", "kind"));
  rec.spec.mode = mode_from_string(cfg.get("expert", "mode"));
  rec.spec.mask = mask_region_from_string(cfg.get_or("expert", "mask", "none"));
  rec.spec.budget = cfg.get_int_or("expert", "budget", 0);
  rec.spec.seed = cfg.get_uint64_or("expert", "seed", 0);
  rec.eval_score = cfg.get_double_or("expert", "eval_score", 0.0);
  rec.spec.env = read_env_config(cfg, "env");
  rec.checksum = std::stoull(cfg.get("expert", "checksum"));
  uint64_t actual = net_checksum(rec.net);
  if (actual != rec.checksum)
    throw std::runtime_error("expert model corrupted (checksum mismatch): " +
                             model_path);
  return rec;
}

ExpertSlot expert_slot(const ExpertRecord& rec) {
  ExpertSlot slot;
  slot.net = rec.net;
  slot.name = rec.spec.name;
  slot.checksum = rec.checksum;
  if (rec.spec.kind == ExpertKind::Masked) {
    slot.mask = rec.spec.mask;
    slot.mask_rows = rec.spec.env.catch_rows;
    slot.mask_cols = rec.spec.env.catch_cols;
  }
  return slot;
}

}  // namespace a2t
