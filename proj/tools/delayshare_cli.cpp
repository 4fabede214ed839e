// delayshare: aggregate anomaly-detector scores under delayed feedback.
//
//   delayshare run    --corpus DIR --detectors a,b --method fixed --game log --alpha 0,0.1 --delay fixed:1 --out DIR
//   delayshare bounds ... [--k 0,1,2,3] [--strict]
//   delayshare synth  --seed 7 --experts 5 --length 200 --instances 10 --out DIR
//
// Exit codes: 0 success, 1 input/load failure, 2 invalid configuration,
// 3 bound violation under `bounds --strict`.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delayshare.hpp"

namespace ds = delayshare;

namespace {

constexpr int kLoadFailure = 1;
constexpr int kValidationError = 2;
constexpr int kBoundViolation = 3;

struct CommonFlags {
  std::string corpus;
  std::vector<std::string> detectors;
  std::string method = "fixed";
  std::string game = "log";
  std::vector<double> alphas{0.0};
  std::vector<std::string> delays{"fixed:1"};
  std::uint64_t seed = 0;
  std::string out;
  std::string fill = "strict";
  double clip = 1e-6;
  std::size_t jobs = 1;
  bool no_traces = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--corpus", f.corpus, "Corpus root (data/, results/, labels/)")->required();
  app->add_option("--detectors", f.detectors, "Detector names in column order, or 'all'")->delimiter(',')->required();
  app->add_option("--method", f.method, "aap|fixed|variable")->check(CLI::IsMember({"aap", "fixed", "variable"}));
  app->add_option("--game", f.game, "log|square")->check(CLI::IsMember({"log", "square"}));
  app->add_option("--alpha", f.alphas, "Switching rates")->delimiter(',');
  app->add_option("--delay", f.delays, "Delay schedules: fixed:D or random:LO:HI[:seed=S]")->delimiter(',');
  app->add_option("--seed", f.seed, "Seed for random delay schedules");
  app->add_option("--out", f.out, "Output directory")->required();
  app->add_option("--fill", f.fill, "strict|ffill")->check(CLI::IsMember({"strict", "ffill"}));
  app->add_option("--clip", f.clip, "Probability clipping for log-loss");
  app->add_option("--jobs", f.jobs, "Worker threads");
  app->add_flag("--no-traces", f.no_traces, "Skip per-run prediction, weight and regret traces");
}

std::vector<std::string> discover_detectors(const std::filesystem::path& root) {
  std::vector<std::string> names;
  const auto results = root / "results";
  if (!std::filesystem::is_directory(results)) throw ds::load_error(results.string() + ": not a directory");
  for (const auto& e : std::filesystem::directory_iterator(results))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

ds::ExperimentConfig to_config(const CommonFlags& f) {
  ds::ExperimentConfig cfg;
  cfg.corpus_root = f.corpus;
  cfg.detectors = f.detectors;
  if (cfg.detectors.size() == 1 && cfg.detectors.front() == "all") cfg.detectors = discover_detectors(cfg.corpus_root);
  static const std::map<std::string, ds::Method> methods{
      {"aap", ds::Method::aap}, {"fixed", ds::Method::fixed_share}, {"variable", ds::Method::variable_share}};
  cfg.method = methods.at(f.method);
  cfg.game = f.game == "log" ? ds::LossKind::log_loss : ds::LossKind::square_loss;
  cfg.alphas = f.alphas;
  cfg.delays = f.delays;
  cfg.seed = f.seed;
  cfg.output_dir = f.out;
  cfg.fill = f.fill == "ffill" ? ds::FillPolicy::ffill : ds::FillPolicy::strict;
  cfg.clip_epsilon = f.clip;
  cfg.jobs = f.jobs;
  cfg.traces = !f.no_traces;
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation of anomaly detectors with Fixed-share / Variable-share under delayed feedback"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Replay the (series x alpha x delay) grid and write metric reports");
  add_common(run, run_flags);

  CommonFlags bound_flags;
  std::vector<std::size_t> ks{0, 1, 2, 3};
  bool strict = false;
  auto* bounds = app.add_subcommand("bounds", "Check regret bounds against the best superexperts");
  add_common(bounds, bound_flags);
  bounds->add_option("--k", ks, "Switch budgets of the superexpert comparators")->delimiter(',');
  bounds->add_flag("--strict", strict, "Exit with status 3 on any bound violation");

  ds::SynthConfig synth_cfg;
  std::size_t instances = 1;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write seeded synthetic instances as a corpus");
  synth->add_option("--seed", synth_cfg.seed, "Seed of the first instance")->required();
  synth->add_option("--experts", synth_cfg.n_experts, "Number of experts");
  synth->add_option("--length", synth_cfg.length, "Slots per instance");
  synth->add_option("--instances", instances, "Number of instances (seeds seed, seed+1, ...)");
  synth->add_option("--p-enter", synth_cfg.p_enter, "Per-slot probability of entering an anomaly window");
  synth->add_option("--p-exit", synth_cfg.p_exit, "Per-slot probability of leaving an anomaly window");
  synth->add_option("--leader-margin", synth_cfg.leader_margin, "Accuracy margin of the tracking expert (0 = pure noise)");
  synth->add_option("--leader-switches", synth_cfg.leader_switches, "Number of changes of the tracking expert");
  synth->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidationError;
  }

  try {
    if (*synth) {
      ds::write_files(synth_out, ds::synthetic_corpus(synth_cfg, instances));
      return 0;
    }
    const bool is_run = static_cast<bool>(*run);
    auto cfg = to_config(is_run ? run_flags : bound_flags);
    cfg.ks = ks;
    try {
      cfg.validate();
    } catch (const ds::config_error& e) {
      std::cerr << "invalid configuration: " << e.what() << "\n";
      return kValidationError;
    }
    const auto corpus = ds::load_corpus(cfg);
    if (is_run) {
      ds::write_files(cfg.output_dir, ds::run_experiment(cfg, corpus));
      return 0;
    }
    const auto rep = ds::bounds_experiment(cfg, corpus);
    ds::write_files(cfg.output_dir, rep.files);
    std::cout << "bound violations: " << rep.violations << ", weight-sum violations: " << rep.weight_sum_violations
              << "\n";
    if (strict && (rep.violations > 0 || rep.weight_sum_violations > 0)) return kBoundViolation;
    return 0;
  } catch (const ds::config_error& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kValidationError;
  } catch (const ds::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kLoadFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kLoadFailure;
  }
}
