#include "a2t/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace a2t {

namespace fs = std::filesystem;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ReinforceA2T:
      return "reinforce_a2t";
    case Algorithm::ActorCriticA2T:
      return "actor_critic_a2t";
    case Algorithm::QLearningA2T:
      return "q_learning_a2t";
    case Algorithm::ScratchBaseline:
      return "scratch";
    case Algorithm::FineTuneBaseline:
      return "fine_tune";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "reinforce_a2t") return Algorithm::ReinforceA2T;
  if (s == "actor_critic_a2t") return Algorithm::ActorCriticA2T;
  if (s == "q_learning_a2t") return Algorithm::QLearningA2T;
  if (s == "scratch") return Algorithm::ScratchBaseline;
  if (s == "fine_tune") return Algorithm::FineTuneBaseline;
  throw std::runtime_error("unknown algorithm: " + s);
}

uint64_t seed_offset_from_env() {
  const char* v = std::getenv("A2T_SEED_OFFSET");
  if (v == nullptr || *v == '\0') return 0;
  return std::stoull(v);
}

namespace {

Mode algorithm_mode(Algorithm a, Mode configured) {
  switch (a) {
    case Algorithm::ReinforceA2T:
    case Algorithm::ActorCriticA2T:
      return Mode::Policy;
    case Algorithm::QLearningA2T:
      return Mode::Value;
    default:
      return configured;
  }
}

PolicyTrainConfig read_policy_config(const Config& cfg) {
  cfg.require_keys("policy",
                   {"algorithm", "lr_attention", "lr_base", "lr_critic",
                    "baseline", "baseline_decay", "gamma", "discounted_return",
                    "norm_eps"});
  PolicyTrainConfig p;
  std::string alg = cfg.get_or("policy", "algorithm", "reinforce");
  if (alg == "reinforce")
    p.algorithm = PolicyAlgorithm::Reinforce;
  else if (alg == "actor_critic")
    p.algorithm = PolicyAlgorithm::ActorCritic;
  else
    throw std::runtime_error("unknown policy algorithm: " + alg);
  p.lr_attention = cfg.get_double_or("policy", "lr_attention", p.lr_attention);
  p.lr_base = cfg.get_double_or("policy", "lr_base", p.lr_base);
  p.lr_critic = cfg.get_double_or("policy", "lr_critic", p.lr_critic);
  std::string b = cfg.get_or("policy", "baseline", "running_mean");
  if (b == "none")
    p.baseline = BaselineMode::None;
  else if (b == "running_mean")
    p.baseline = BaselineMode::RunningMean;
  else
    throw std::runtime_error("unknown baseline mode: " + b);
  p.baseline_decay =
      cfg.get_double_or("policy", "baseline_decay", p.baseline_decay);
  p.gamma = cfg.get_double_or("policy", "gamma", p.gamma);
  p.discounted_return =
      cfg.get_bool_or("policy", "discounted_return", p.discounted_return);
  p.norm_eps = cfg.get_double_or("policy", "norm_eps", p.norm_eps);
  return p;
}

ValueTrainConfig read_value_config(const Config& cfg) {
  cfg.require_keys(
      "value", {"gamma", "eps_start", "eps_end", "eps_anneal_steps",
                "eval_eps", "batch_size", "learn_start", "learn_every",
                "sync_period", "clip_rewards", "replay_capacity", "rho",
                "steps_per_epoch", "eval_steps", "learning_rate",
                "lr_attention", "rms_decay", "rms_epsilon", "hidden"});
  ValueTrainConfig v;
  v.gamma = cfg.get_double_or("value", "gamma", v.gamma);
  v.eps_start = cfg.get_double_or("value", "eps_start", v.eps_start);
  v.eps_end = cfg.get_double_or("value", "eps_end", v.eps_end);
  v.eps_anneal_steps =
      cfg.get_int_or("value", "eps_anneal_steps", v.eps_anneal_steps);
  v.eval_eps = cfg.get_double_or("value", "eval_eps", v.eval_eps);
  v.batch_size = cfg.get_int_or("value", "batch_size", v.batch_size);
  v.learn_start = cfg.get_int_or("value", "learn_start", v.learn_start);
  v.learn_every = cfg.get_int_or("value", "learn_every", v.learn_every);
  v.sync_period = cfg.get_int_or("value", "sync_period", v.sync_period);
  v.clip_rewards = cfg.get_bool_or("value", "clip_rewards", v.clip_rewards);
  v.replay_capacity = static_cast<size_t>(cfg.get_int_or(
      "value", "replay_capacity", static_cast<int>(v.replay_capacity)));
  v.rho = cfg.get_double_or("value", "rho", v.rho);
  v.steps_per_epoch =
      cfg.get_int_or("value", "steps_per_epoch", v.steps_per_epoch);
  v.eval_steps = cfg.get_int_or("value", "eval_steps", v.eval_steps);
  v.learning_rate =
      cfg.get_double_or("value", "learning_rate", v.learning_rate);
  v.lr_attention = cfg.get_double_or("value", "lr_attention", v.lr_attention);
  v.rms_decay = cfg.get_double_or("value", "rms_decay", v.rms_decay);
  v.rms_epsilon = cfg.get_double_or("value", "rms_epsilon", v.rms_epsilon);
  v.hidden = cfg.get_int_or("value", "hidden", v.hidden);
  return v;
}

}  // namespace

ExperimentConfig parse_experiment_config(const Config& cfg) {
  cfg.require_keys(
      "experiment",
      {"name", "algorithm", "mode", "experts", "finetune_from",
       "attention_only", "budget", "seeds", "output_dir", "expert_store",
       "threshold", "stop_at_threshold", "smooth_window", "hidden"});
  ExperimentConfig e;
  e.name = cfg.get("experiment", "name");
  e.algorithm = algorithm_from_string(cfg.get("experiment", "algorithm"));
  e.mode = mode_from_string(cfg.get_or("experiment", "mode", "value"));
  e.mode = algorithm_mode(e.algorithm, e.mode);
  if (cfg.has("experiment", "experts"))
    e.expert_names = split(cfg.get("experiment", "experts"), ',');
  e.finetune_from = cfg.get_or("experiment", "finetune_from", "");
  e.attention_only = cfg.get_bool_or("experiment", "attention_only", false);
  e.budget = cfg.get_int("experiment", "budget");
  for (const std::string& s : split(cfg.get("experiment", "seeds"), ','))
    e.seeds.push_back(std::stoull(s));
  if (e.seeds.empty())
    throw std::runtime_error("experiment '" + e.name + "': no seeds");
  e.output_dir = cfg.get("experiment", "output_dir");
  e.expert_store = cfg.get_or("experiment", "expert_store", "experts");
  e.has_threshold = cfg.has("experiment", "threshold");
  if (e.has_threshold) e.threshold = cfg.get_double("experiment", "threshold");
  e.stop_at_threshold =
      cfg.get_bool_or("experiment", "stop_at_threshold", false);
  e.policy_smooth_window =
      cfg.get_int_or("experiment", "smooth_window", e.policy_smooth_window);
  e.hidden = cfg.get_int_or("experiment", "hidden", e.hidden);
  if (cfg.has_section("policy")) e.policy = read_policy_config(cfg);
  if (cfg.has_section("value")) e.value = read_value_config(cfg);
  if (e.algorithm == Algorithm::ReinforceA2T)
    e.policy.algorithm = PolicyAlgorithm::Reinforce;
  if (e.algorithm == Algorithm::ActorCriticA2T)
    e.policy.algorithm = PolicyAlgorithm::ActorCritic;
  if (e.algorithm == Algorithm::FineTuneBaseline && e.finetune_from.empty())
    throw std::runtime_error("fine_tune requires finetune_from");
  e.env = read_env_config(cfg, "env");
  return e;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(Config::parse_file(path));
}

Ensemble build_experiment_ensemble(const ExperimentConfig& cfg, uint64_t seed,
                                   std::vector<std::string>* member_names) {
  std::mt19937_64 rng(seed);
  Environment env(cfg.env);
  std::vector<ExpertSlot> slots;
  std::vector<std::string> names;
  bool uses_experts = cfg.algorithm == Algorithm::ReinforceA2T ||
                      cfg.algorithm == Algorithm::ActorCriticA2T ||
                      cfg.algorithm == Algorithm::QLearningA2T;
  if (uses_experts) {
    for (const std::string& name : cfg.expert_names) {
      ExpertRecord rec = load_expert(cfg.expert_store + "/" + name);
      if (rec.spec.mode != cfg.mode)
        throw std::runtime_error("expert '" + name +
                                 "' mode does not match the algorithm");
      slots.push_back(expert_slot(rec));
      names.push_back(name.empty() ? ("expert_" + std::to_string(names.size()))
                                   : name);
    }
  }
  bool with_base = !cfg.attention_only;
  if (!uses_experts) with_base = true;
  Ensemble ens =
      Ensemble::make(cfg.mode, std::move(slots), with_base,
                     env.observation_dim(), env.action_count(), cfg.hidden,
                     rng);
  if (cfg.algorithm == Algorithm::FineTuneBaseline) {
    ExpertRecord donor = load_expert(cfg.expert_store + "/" + cfg.finetune_from);
    if (donor.spec.mode != cfg.mode)
      throw std::runtime_error("finetune donor mode mismatch");
    ens.mutable_base() = donor.net;
  }
  if (with_base) names.push_back("base");
  if (member_names) *member_names = names;
  return ens;
}

namespace {

void write_csv(const std::string& path, const std::string& index_name,
               const std::vector<std::string>& member_names,
               const SeedRunResult& run, bool policy_mode) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << index_name << ",score";
  if (policy_mode) os << ",length";
  for (const std::string& n : member_names) os << ",w_" << n;
  os << "\n";
  os.precision(12);
  for (size_t i = 0; i < run.scores.size(); ++i) {
    os << i << "," << run.scores[i];
    if (policy_mode) os << "," << run.lengths[i];
    for (double w : run.weights[i]) os << "," << w;
    os << "\n";
  }
}

void write_averaged_csv(const std::string& path, const std::string& index_name,
                        const std::vector<std::string>& member_names,
                        const std::vector<SeedRunResult>& runs) {
  size_t len = SIZE_MAX;
  for (const SeedRunResult& r : runs) len = std::min(len, r.scores.size());
  if (len == SIZE_MAX) len = 0;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << index_name << ",score_mean,score_min,score_max";
  for (const std::string& n : member_names) os << ",w_" << n;
  os << "\n";
  os.precision(12);
  for (size_t i = 0; i < len; ++i) {
    double mean = 0.0, lo = runs[0].scores[i], hi = runs[0].scores[i];
    std::vector<double> wmean(member_names.size(), 0.0);
    for (const SeedRunResult& r : runs) {
      mean += r.scores[i];
      lo = std::min(lo, r.scores[i]);
      hi = std::max(hi, r.scores[i]);
      for (size_t k = 0; k < wmean.size(); ++k) wmean[k] += r.weights[i][k];
    }
    mean /= runs.size();
    os << i << "," << mean << "," << lo << "," << hi;
    for (double w : wmean) os << "," << w / runs.size();
    os << "\n";
  }
}

int threshold_index_policy(const std::vector<double>& scores, double threshold,
                           int window) {
  double sum = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    sum += scores[i];
    if (i >= static_cast<size_t>(window)) sum -= scores[i - window];
    size_t n = std::min(i + 1, static_cast<size_t>(window));
    if (i + 1 >= static_cast<size_t>(window) && sum / n >= threshold)
      return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  result.cfg = cfg;
  uint64_t offset = seed_offset_from_env();
  fs::create_directories(cfg.output_dir);

  bool policy_mode = cfg.mode == Mode::Policy;
  for (uint64_t base_seed : cfg.seeds) {
    uint64_t seed = base_seed + offset;
    std::vector<std::string> names;
    Ensemble ens = build_experiment_ensemble(cfg, seed, &names);
    result.member_names = names;
    EnvConfig env_cfg = cfg.env;
    env_cfg.seed = seed * 7919 + 1;
    Environment env(env_cfg);
    std::mt19937_64 rng(seed * 6364136223846793005ull + 1442695040888963407ull);

    SeedRunResult run;
    run.seed = seed;
    if (policy_mode) {
      PolicyStop stop = nullptr;
      if (cfg.has_threshold && cfg.stop_at_threshold) {
        stop = [&run, &cfg](const PolicyEpisodeRecord&) {
          return threshold_index_policy(run.scores, cfg.threshold,
                                        cfg.policy_smooth_window) >= 0;
        };
      }
      PolicyLogger logger = [&run](const PolicyEpisodeRecord& rec) {
        run.scores.push_back(rec.episode_return);
        run.lengths.push_back(rec.length);
        run.weights.push_back(rec.mean_weights);
      };
      train_policy(ens, env, cfg.policy, cfg.budget, rng, logger, nullptr,
                   stop);
      if (cfg.has_threshold)
        run.steps_to_threshold = threshold_index_policy(
            run.scores, cfg.threshold, cfg.policy_smooth_window);
    } else {
      ValueLogger logger = [&run](const EpochStats& st) {
        run.scores.push_back(st.eval_mean_score);
        run.weights.push_back(st.mean_weights);
      };
      StopPredicate stop = nullptr;
      if (cfg.has_threshold && cfg.stop_at_threshold) {
        stop = [&cfg](const EpochStats& st) {
          return st.eval_mean_score >= cfg.threshold;
        };
      }
      train_value(ens, env, cfg.value, cfg.budget, rng, logger, stop);
      if (cfg.has_threshold) {
        for (size_t i = 0; i < run.scores.size(); ++i)
          if (run.scores[i] >= cfg.threshold) {
            run.steps_to_threshold = static_cast<int>(i);
            break;
          }
      }
    }
    if (auto violation = ens.freeze_check())
      throw std::runtime_error("expert " + std::to_string(*violation) +
                               " was modified during training");
    run.final_score = run.scores.empty() ? 0.0 : run.scores.back();
    write_csv(cfg.output_dir + "/seed_" + std::to_string(seed) + ".csv",
              policy_mode ? "episode" : "epoch", names, run, policy_mode);

    // Tabular envs: per-state attention snapshot for this seed.
    if (cfg.env.kind != EnvKind::Catch) {
      emit_attention_heatmap(ens, env, names,
                             cfg.output_dir + "/attention_seed_" +
                                 std::to_string(seed) + ".svg");
    }
    result.runs.push_back(std::move(run));
  }

  write_averaged_csv(cfg.output_dir + "/averaged.csv",
                     policy_mode ? "episode" : "epoch", result.member_names,
                     result.runs);

  // Learning curve with min/max band.
  size_t len = SIZE_MAX;
  for (const SeedRunResult& r : result.runs)
    len = std::min(len, r.scores.size());
  Series curve;
  curve.label = "score";
  for (size_t i = 0; i < len; ++i) {
    double mean = 0.0, lo = result.runs[0].scores[i],
           hi = result.runs[0].scores[i];
    for (const SeedRunResult& r : result.runs) {
      mean += r.scores[i];
      lo = std::min(lo, r.scores[i]);
      hi = std::max(hi, r.scores[i]);
    }
    curve.y.push_back(mean / result.runs.size());
    curve.y_min.push_back(lo);
    curve.y_max.push_back(hi);
  }
  write_line_chart(cfg.output_dir + "/learning_curve.svg",
                   cfg.name + " learning curve", {curve});

  std::vector<Series> weight_series(result.member_names.size());
  for (size_t k = 0; k < result.member_names.size(); ++k)
    weight_series[k].label = result.member_names[k];
  for (size_t i = 0; i < len; ++i)
    for (size_t k = 0; k < result.member_names.size(); ++k) {
      double mean = 0.0;
      for (const SeedRunResult& r : result.runs) mean += r.weights[i][k];
      weight_series[k].y.push_back(mean / result.runs.size());
    }
  write_line_chart(cfg.output_dir + "/attention_evolution.svg",
                   cfg.name + " attention evolution", weight_series);

  double mean_final = 0.0, mean_thresh = 0.0;
  for (const SeedRunResult& r : result.runs) {
    mean_final += r.final_score;
    mean_thresh +=
        r.steps_to_threshold >= 0 ? r.steps_to_threshold : cfg.budget;
  }
  result.mean_final_score = mean_final / result.runs.size();
  result.mean_steps_to_threshold = mean_thresh / result.runs.size();
  return result;
}

bool run_suite(const std::vector<std::string>& config_paths,
               const std::string& summary_path,
               std::vector<SuiteEntry>* entries_out) {
  std::vector<SuiteEntry> entries;
  bool ok = true;
  for (const std::string& path : config_paths) {
    SuiteEntry entry;
    entry.name = path;
    try {
      ExperimentConfig cfg = load_experiment_config(path);
      entry.name = cfg.name;
      ExperimentResult res = run_experiment(cfg);
      entry.ok = true;
      entry.final_score = res.mean_final_score;
      entry.steps_to_threshold = res.mean_steps_to_threshold;
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
      ok = false;
    }
    entries.push_back(std::move(entry));
  }
  std::ofstream os(summary_path);
  if (!os) throw std::runtime_error("cannot write " + summary_path);
  os << "name,status,final_score,steps_to_threshold,error\n";
  for (const SuiteEntry& e : entries)
    os << e.name << "," << (e.ok ? "ok" : "failed") << "," << e.final_score
       << "," << e.steps_to_threshold << "," << e.error << "\n";
  if (entries_out) *entries_out = entries;
  return ok;
}

void emit_attention_heatmap(const Ensemble& ens, const Environment& env,
                            const std::vector<std::string>& member_names,
                            const std::string& svg_path) {
  int states = env.state_count();  // throws for non-enumerable envs
  if (states == 0) throw std::invalid_argument("no states to render");
  int members = ens.member_count();
  const int cell = 18, label_w = 60, top = 30;
  int width = label_w + members * cell + 10;
  int height = top + states * cell + 10;
  std::ofstream os(svg_path);
  if (!os) throw std::runtime_error("cannot write " + svg_path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\">\n";
  for (int m = 0; m < members; ++m)
    os << "<text x=\"" << label_w + m * cell + 2 << "\" y=\"" << top - 8
       << "\" font-size=\"9\">"
       << (m < static_cast<int>(member_names.size()) ? member_names[m]
                                                     : std::to_string(m))
       << "</text>\n";
  for (int s = 0; s < states; ++s) {
    std::vector<double> w = ens.attend(env.observation_of_state(s));
    os << "<text x=\"2\" y=\"" << top + s * cell + 12 << "\" font-size=\"9\">s"
       << s << "</text>\n";
    for (int m = 0; m < members; ++m) {
      int shade = static_cast<int>(255.0 * (1.0 - w[m]));
      os << "<rect x=\"" << label_w + m * cell << "\" y=\"" << top + s * cell
         << "\" width=\"" << cell - 1 << "\" height=\"" << cell - 1
         << "\" fill=\"rgb(" << shade << "," << 255 << "," << shade
         << ")\"/>\n";
    }
  }
  os << "</svg>\n";
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series) {
  const int w = 640, h = 400, ml = 60, mr = 20, mt = 40, mb = 40;
  size_t n = 0;
  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const Series& s : series) {
    n = std::max(n, s.y.size());
    for (size_t i = 0; i < s.y.size(); ++i) {
      double a = s.y_min.size() == s.y.size() ? s.y_min[i] : s.y[i];
      double b = s.y_max.size() == s.y.size() ? s.y_max[i] : s.y[i];
      if (first) {
        lo = std::min(a, s.y[i]);
        hi = std::max(b, s.y[i]);
        first = false;
      }
      lo = std::min({lo, a, s.y[i]});
      hi = std::max({hi, b, s.y[i]});
    }
  }
  if (n < 2) n = 2;
  if (hi - lo < 1e-12) hi = lo + 1.0;
  auto px = [&](size_t i) {
    return ml + (w - ml - mr) * static_cast<double>(i) / (n - 1);
  };
  auto py = [&](double v) { return h - mb - (h - mt - mb) * (v - lo) / (hi - lo); };
  static const char* colors[] = {"#1b7837", "#2166ac", "#b2182b",
                                 "#762a83", "#e08214", "#636363"};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\">\n";
  os << "<text x=\"" << ml << "\" y=\"20\" font-size=\"13\">" << title
     << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"5\" y=\"" << py(hi) + 4 << "\" font-size=\"10\">" << hi
     << "</text>\n";
  os << "<text x=\"5\" y=\"" << py(lo) + 4 << "\" font-size=\"10\">" << lo
     << "</text>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = colors[k % 6];
    if (s.y_min.size() == s.y.size() && s.y_max.size() == s.y.size()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" "
         << "stroke=\"none\" points=\"";
      for (size_t i = 0; i < s.y.size(); ++i)
        os << px(i) << "," << py(s.y_min[i]) << " ";
      for (size_t i = s.y.size(); i-- > 0;)
        os << px(i) << "," << py(s.y_max[i]) << " ";
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.y.size(); ++i)
      os << px(i) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    os << "<text x=\"" << w - mr - 120 << "\" y=\"" << mt + 14 * (k + 1)
       << "\" font-size=\"10\" fill=\"" << color << "\">" << s.label
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace a2t
