// Command-line front end: expert building, experiment runs, suites, plot
// regeneration, and a quick invariant check.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "a2t/config.hpp"
#include "a2t/harness.hpp"

namespace fs = std::filesystem;
using namespace a2t;

namespace {

ExpertSpec read_expert_spec(const Config& cfg, std::string* store_dir,
                            std::string* donor_dir) {
  cfg.require_keys("expert", {"name", "kind", "mode", "mask", "budget", "seed",
                              "store", "donor"});
  ExpertSpec spec;
  spec.name = cfg.get("expert", "name");
  spec.kind = expert_kind_from_string(cfg.get("expert", "kind"));
  spec.mode = mode_from_string(cfg.get("expert", "mode"));
  spec.mask = mask_region_from_string(cfg.get_or("expert", "mask", "none"));
  spec.budget = cfg.get_int_or("expert", "budget", 10);
  spec.seed = cfg.get_uint64_or("expert", "seed", 0);
  spec.env = read_env_config(cfg, "env");
  *store_dir = cfg.get_or("expert", "store", "experts");
  *donor_dir = cfg.get_or("expert", "donor", "");
  return spec;
}

int cmd_build_expert(const std::string& path) {
  Config cfg = Config::parse_file(path);
  std::string store, donor_dir;
  ExpertSpec spec = read_expert_spec(cfg, &store, &donor_dir);
  ExpertRecord donor;
  const ExpertRecord* donor_ptr = nullptr;
  if (!donor_dir.empty()) {
    donor = load_expert(donor_dir);
    donor_ptr = &donor;
  }
  ExpertRecord rec = build_expert(spec, donor_ptr);
  std::string dir = store + "/" + spec.name;
  save_expert(rec, dir);
  std::cout << "built expert '" << spec.name << "' (eval score "
            << rec.eval_score << ") -> " << dir << "\n";
  return 0;
}

int cmd_run(const std::string& path) {
  ExperimentConfig cfg = load_experiment_config(path);
  ExperimentResult res = run_experiment(cfg);
  std::cout << "experiment '" << cfg.name << "': mean final score "
            << res.mean_final_score;
  if (cfg.has_threshold)
    std::cout << ", mean steps to threshold " << res.mean_steps_to_threshold;
  std::cout << "\nresults in " << cfg.output_dir << "\n";
  return 0;
}

int cmd_suite(const std::string& dir) {
  std::vector<std::string> paths;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".cfg")
        paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
  } else if (fs::exists(dir)) {
    paths.push_back(dir);
  }
  std::vector<SuiteEntry> entries;
  bool ok = run_suite(paths, (fs::is_directory(dir) ? dir : ".") +
                                 std::string("/summary.csv"),
                      &entries);
  for (const SuiteEntry& e : entries)
    std::cout << e.name << ": " << (e.ok ? "ok" : "FAILED " + e.error)
              << (e.ok ? " (final score " + std::to_string(e.final_score) + ")"
                       : "")
              << "\n";
  return ok ? 0 : 1;
}

int cmd_plot(const std::string& results_dir) {
  std::string path = results_dir + "/averaged.csv";
  std::ifstream is(path);
  if (!is) {
    std::cerr << "no averaged.csv under " << results_dir << "\n";
    return 1;
  }
  std::string header;
  std::getline(is, header);
  std::vector<std::string> cols = split(header, ',');
  Series curve;
  curve.label = "score";
  std::vector<Series> weights;
  for (size_t c = 4; c < cols.size(); ++c)
    weights.push_back({cols[c], {}, {}, {}});
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> vals = split(line, ',');
    if (vals.size() != cols.size()) continue;
    curve.y.push_back(std::stod(vals[1]));
    curve.y_min.push_back(std::stod(vals[2]));
    curve.y_max.push_back(std::stod(vals[3]));
    for (size_t c = 4; c < vals.size(); ++c)
      weights[c - 4].y.push_back(std::stod(vals[c]));
  }
  write_line_chart(results_dir + "/learning_curve.svg", "learning curve",
                   {curve});
  write_line_chart(results_dir + "/attention_evolution.svg",
                   "attention evolution", weights);
  std::cout << "plots written under " << results_dir << "\n";
  return 0;
}

bool check(bool ok, const std::string& what, int& failures) {
  std::cout << (ok ? "  ok    " : "  FAIL  ") << what << "\n";
  if (!ok) ++failures;
  return ok;
}

int cmd_verify() {
  int failures = 0;
  std::mt19937_64 rng(7);

  // Gradient check on a small random net.
  {
    Net net = make_net({5, 8, 3}, Head::Softmax, rng);
    std::vector<double> x(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& v : x) v = u(rng);
    Gradient g = log_prob_grad(net, x, 1);
    std::vector<double> flat = flatten(net);
    std::vector<double> gf = flatten(g);
    double worst = 0.0;
    for (size_t i = 0; i < flat.size(); ++i) {
      const double h = 1e-5;
      Net plus = net, minus = net;
      std::vector<double> fp = flat, fm = flat;
      fp[i] += h;
      fm[i] -= h;
      unflatten(plus, fp);
      unflatten(minus, fm);
      double fd = (std::log(forward(plus, x)[1]) -
                   std::log(forward(minus, x)[1])) /
                  (2 * h);
      worst = std::max(worst, std::abs(fd - gf[i]) /
                                  std::max(1.0, std::abs(fd)));
    }
    check(worst < 1e-4, "analytic log-prob gradient matches finite differences",
          failures);
  }
  // Attention simplex over random states.
  {
    std::vector<ExpertSlot> slots(2);
    slots[0].net = make_net({4, 6, 3}, Head::Linear, rng);
    slots[1].net = make_net({4, 6, 3}, Head::Linear, rng);
    Ensemble ens = Ensemble::make(Mode::Value, slots, true, 4, 3, 8, rng);
    bool ok = true;
    std::uniform_real_distribution<double> u(-2, 2);
    for (int it = 0; it < 200; ++it) {
      std::vector<double> s(4);
      for (double& v : s) v = u(rng);
      std::vector<double> w = ens.attend(s);
      double sum = 0.0;
      for (double wi : w) {
        ok = ok && wi >= 0.0 && wi <= 1.0;
        sum += wi;
      }
      ok = ok && std::abs(sum - 1.0) < 1e-6;
    }
    check(ok, "attention weights form a simplex", failures);
    check(!ens.freeze_check().has_value(), "expert checksums intact",
          failures);
  }
  // Replay FIFO.
  {
    ReplayBuffer buf(5);
    for (int i = 0; i < 8; ++i) {
      Transition t;
      t.a = i;
      buf.store(std::move(t), rng);
    }
    bool ok = buf.size() == 5 && buf.contents().front().a == 3 &&
              buf.contents().back().a == 7;
    check(ok, "replay buffer evicts oldest-first", failures);
  }
  // Model round trip.
  {
    Net net = make_net({3, 4, 2}, Head::Linear, rng);
    std::string tmp =
        (fs::temp_directory_path() / "a2t_verify_model.a2t").string();
    save_net_file(net, tmp);
    Net back = load_net_file(tmp);
    check(net_bytes(net) == net_bytes(back), "model round trip is bit-exact",
          failures);
    fs::remove(tmp);
  }

  std::cout << (failures == 0 ? "verify: all checks passed\n"
                              : "verify: FAILURES\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"A2T adaptive transfer: experiments and expert tooling"};
  app.require_subcommand(1);

  std::string spec_path, exp_path, suite_dir, results_dir;
  auto* build = app.add_subcommand("build-expert", "train and store an expert");
  build->add_option("spec", spec_path, "expert spec .cfg")->required();
  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", exp_path, "experiment .cfg")->required();
  auto* suite = app.add_subcommand("suite", "run every .cfg in a directory");
  suite->add_option("dir", suite_dir, "directory of experiment configs")
      ->required();
  auto* plot = app.add_subcommand("plot", "regenerate plots from averaged.csv");
  plot->add_option("results", results_dir, "experiment results directory")
      ->required();
  app.add_subcommand("verify", "run the quick invariant suite");

  CLI11_PARSE(app, argc, argv);
  try {
    if (build->parsed()) return cmd_build_expert(spec_path);
    if (run->parsed()) return cmd_run(exp_path);
    if (suite->parsed()) return cmd_suite(suite_dir);
    if (plot->parsed()) return cmd_plot(results_dir);
    return cmd_verify();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
