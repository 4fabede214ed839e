#pragma once

// Experiment grids over a corpus: (series x alpha x delay) replays, pooled
// metrics, table-shaped reports and bound checks. Reports are rendered in
// memory as a FileSet so nothing is written unless the whole grid succeeds.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "delayshare/dataio.hpp"
#include "delayshare/delaysim.hpp"
#include "delayshare/metrics.hpp"
#include "delayshare/oracle.hpp"
#include "delayshare/replay.hpp"
#include "delayshare/synth.hpp"

namespace delayshare {

struct ExperimentConfig {
  std::filesystem::path corpus_root;
  std::vector<std::string> detectors;
  Method method = Method::fixed_share;
  LossKind game = LossKind::log_loss;
  std::vector<double> alphas{0.0};
  std::vector<std::string> delays{"fixed:1"};
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  FillPolicy fill = FillPolicy::strict;
  double clip_epsilon = 1e-6;
  std::size_t jobs = 1;
  bool traces = true;
  // Switch budgets for superexpert comparators (bounds only).
  std::vector<std::size_t> ks{0, 1, 2, 3};

  GameSpec game_spec() const {
    return game == LossKind::log_loss ? GameSpec::log_loss(clip_epsilon) : GameSpec::square_loss();
  }

  AlgorithmSpec algorithm(double alpha) const { return AlgorithmSpec{method, alpha, game_spec()}; }

  void validate() const {
    if (detectors.empty()) throw config_error("at least one detector is required");
    if (alphas.empty()) throw config_error("at least one alpha is required");
    if (delays.empty()) throw config_error("at least one delay schedule is required");
    for (double a : alphas) algorithm(a).validate();
    for (const auto& d : delays) parse_delay_kind(d, seed);
    if (jobs == 0) throw config_error("jobs must be at least 1");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["corpus"] = corpus_root.generic_string();
    j["detectors"] = detectors;
    j["method"] = to_string(method);
    j["game"] = to_string(game);
    j["alphas"] = alphas;
    j["delays"] = delays;
    j["seed"] = seed;
    j["fill"] = fill == FillPolicy::strict ? "strict" : "ffill";
    j["clip_epsilon"] = clip_epsilon;
    j["k"] = ks;
    return j;
  }
};

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Per-series seed for random delay schedules, so that series do not share
// one realized schedule.
inline std::uint64_t series_seed(std::uint64_t seed, std::string_view key) {
  std::uint64_t z = seed ^ fnv1a(key);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline DelayKind delay_for_series(const std::string& text, std::uint64_t seed, const std::string& key) {
  auto kind = parse_delay_kind(text, seed);
  if (auto* r = std::get_if<RandomDelay>(&kind)) r->seed = series_seed(r->seed, key);
  return kind;
}

struct LoadedCorpus {
  std::vector<CorpusSeries> series;
  std::string snapshot_hash;
};

inline LoadedCorpus load_corpus(const ExperimentConfig& cfg) {
  LoadedCorpus out;
  const auto labels_path = cfg.corpus_root / "labels" / "combined_windows.json";
  const auto labels = load_windows(labels_path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto absorb = [&h](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    h = fnv1a(p.filename().string(), h);
    h = fnv1a(ss.str(), h);
  };
  absorb(labels_path);
  for (const auto& key : list_corpus_series(cfg.corpus_root)) {
    out.series.push_back(load_corpus_series(cfg.corpus_root, key, cfg.detectors, labels, cfg.fill));
    absorb(cfg.corpus_root / "data" / key);
    for (const auto& d : cfg.detectors) absorb(detector_results_path(cfg.corpus_root, d, key));
  }
  out.snapshot_hash = hex64(h);
  return out;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
// exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string algorithm_label(Method method, double alpha) {
  return std::string(to_string(method)) + "_a" + format_real(alpha);
}

inline std::string sanitize(std::string_view key) {
  std::string s(key);
  if (s.ends_with(".csv")) s.resize(s.size() - 4);
  for (char& c : s)
    if (c == '/' || c == '\\' || c == ' ' || c == ':' || c == '=') c = '_';
  return s;
}

struct CellMetrics {
  std::optional<double> auc;
  std::optional<FScore> f;
  double total_log_loss = 0.0;
  double total_square_loss = 0.0;
};

inline CellMetrics score_predictions(std::span<const double> preds, std::span<const Outcome> labels,
                                     double clip_epsilon) {
  CellMetrics m;
  const auto lg = GameSpec::log_loss(clip_epsilon);
  const auto sq = GameSpec::square_loss();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    m.total_log_loss += loss(lg, labels[i], preds[i]);
    m.total_square_loss += loss(sq, labels[i], preds[i]);
  }
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos > 0) m.f = max_f_score(preds, labels);
  if (pos > 0 && static_cast<std::size_t>(pos) < labels.size()) m.auc = auc(preds, labels);
  return m;
}

inline std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

struct GridCell {
  std::size_t series = 0, alpha = 0, delay = 0;
};

inline std::vector<GridCell> grid_cells(std::size_t n_series, const ExperimentConfig& cfg) {
  std::vector<GridCell> cells;
  for (std::size_t s = 0; s < n_series; ++s)
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a)
      for (std::size_t d = 0; d < cfg.delays.size(); ++d) cells.push_back({s, a, d});
  return cells;
}

inline std::string weights_csv(const RunLedger& led, const std::vector<std::string>& names) {
  std::string out = "step";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (std::size_t t = 0; t < led.steps(); ++t) {
    out += std::to_string(t + 1);
    for (std::size_t i = 0; i < names.size(); ++i) out += "," + format_real(led.weights_history(t, i));
    out += "\n";
  }
  return out;
}

inline std::string manifest(const ExperimentConfig& cfg, const std::string& command, const std::string& snapshot,
                            const FileSet& files, const nlohmann::json& extra = nullptr) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = cfg.to_json();
  j["config_hash"] = hex64(fnv1a(cfg.to_json().dump()));
  j["corpus_snapshot_hash"] = snapshot;
  j["metric_pooling"] = "pooled: AUC and F-score over concatenated (score, label) pairs of all series; losses summed";
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [path, body] : files) list.push_back({{"path", path}, {"fnv1a64", hex64(fnv1a(body))}});
  j["files"] = std::move(list);
  if (!extra.is_null()) j["summary"] = extra;
  return j.dump(2) + "\n";
}

// Replays the whole grid and renders the reports.
inline FileSet run_experiment(const ExperimentConfig& cfg, const LoadedCorpus& corpus) {
  cfg.validate();
  const auto cells = grid_cells(corpus.series.size(), cfg);
  std::vector<std::vector<double>> preds(cells.size());
  std::vector<CellMetrics> per_series(cells.size());
  std::vector<std::string> weights(cells.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
    const auto& cell = cells[c];
    const auto& cs = corpus.series[cell.series];
    const auto kind = delay_for_series(cfg.delays[cell.delay], cfg.seed, cs.key);
    const auto schedule = make_schedule(kind, cs.series.outcomes.size());
    const auto run = replay(cfg.algorithm(cfg.alphas[cell.alpha]), cs.panel.scores, cs.series.outcomes, schedule);
    per_series[c] = score_predictions(run.ledger.predictions, cs.series.outcomes, cfg.clip_epsilon);
    if (cfg.traces) weights[c] = weights_csv(run.ledger, cfg.detectors);
    preds[c] = run.ledger.predictions;
  });

  FileSet files;
  std::string series_csv = "series,algorithm,alpha,delay,auc,f1,threshold,total_log_loss,total_square_loss\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    const auto& cs = corpus.series[cell.series];
    const auto& m = per_series[c];
    const double alpha = cfg.alphas[cell.alpha];
    series_csv += cs.key + "," + to_string(cfg.method) + "," + format_real(alpha) + "," + cfg.delays[cell.delay] + "," +
                  opt_real(m.auc) + "," + (m.f ? format_real(m.f->f1) : "") + "," +
                  (m.f ? format_real(m.f->threshold) : "") + "," + format_real(m.total_log_loss) + "," +
                  format_real(m.total_square_loss) + "\n";
    if (cfg.traces) {
      const std::string stem = algorithm_label(cfg.method, alpha) + "_" + sanitize(cfg.delays[cell.delay]);
      std::string p = "timestamp,prediction,label\n";
      for (std::size_t t = 0; t < preds[c].size(); ++t)
        p += format_timestamp(cs.series.timestamps[t]) + "," + format_real(preds[c][t]) + "," +
             std::to_string(cs.series.outcomes[t]) + "\n";
      files["predictions/" + sanitize(cs.key) + "/" + stem + ".csv"] = std::move(p);
      files["weights/" + sanitize(cs.key) + "/" + stem + ".csv"] = std::move(weights[c]);
    }
  }
  files["series.csv"] = std::move(series_csv);

  // Pooled rows in (alpha, delay) order; series concatenated in key order.
  std::string summary = "algorithm,alpha,delay,auc,f1,threshold,total_log_loss,total_square_loss\n";
  const std::size_t A = cfg.alphas.size(), D = cfg.delays.size();
  std::vector<CellMetrics> pooled(A * D);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t d = 0; d < D; ++d) {
      std::vector<double> all_preds;
      std::vector<Outcome> all_labels;
      for (std::size_t s = 0; s < corpus.series.size(); ++s) {
        const std::size_t c = (s * A + a) * D + d;
        all_preds.insert(all_preds.end(), preds[c].begin(), preds[c].end());
        const auto& y = corpus.series[s].series.outcomes;
        all_labels.insert(all_labels.end(), y.begin(), y.end());
      }
      auto& m = pooled[a * D + d];
      m = score_predictions(all_preds, all_labels, cfg.clip_epsilon);
      summary += std::string(to_string(cfg.method)) + "," + format_real(cfg.alphas[a]) + "," + cfg.delays[d] + "," +
                 opt_real(m.auc) + "," + (m.f ? format_real(m.f->f1) : "") + "," +
                 (m.f ? format_real(m.f->threshold) : "") + "," + format_real(m.total_log_loss) + "," +
                 format_real(m.total_square_loss) + "\n";
    }
  files["summary.csv"] = std::move(summary);

  auto table = [&](auto value) {
    std::string t = "algorithm";
    for (const auto& d : cfg.delays) t += "," + d;
    t += "\n";
    for (std::size_t a = 0; a < A; ++a) {
      t += algorithm_label(cfg.method, cfg.alphas[a]);
      for (std::size_t d = 0; d < D; ++d) t += "," + value(pooled[a * D + d]);
      t += "\n";
    }
    return t;
  };
  files["table_auc.csv"] = table([](const CellMetrics& m) { return opt_real(m.auc); });
  files["table_f_score.csv"] = table([](const CellMetrics& m) { return m.f ? format_real(m.f->f1) : ""; });
  files["table_log_loss.csv"] = table([](const CellMetrics& m) { return format_real(m.total_log_loss); });
  files["table_square_loss.csv"] = table([](const CellMetrics& m) { return format_real(m.total_square_loss); });

  // Single detectors pooled, for comparison rows.
  std::string det = "detector,auc,f1,threshold,total_log_loss,total_square_loss\n";
  for (std::size_t i = 0; i < cfg.detectors.size(); ++i) {
    std::vector<double> all;
    std::vector<Outcome> labels;
    for (const auto& cs : corpus.series) {
      for (std::size_t t = 0; t < cs.panel.scores.rows(); ++t) all.push_back(cs.panel.scores(t, i));
      labels.insert(labels.end(), cs.series.outcomes.begin(), cs.series.outcomes.end());
    }
    const auto m = score_predictions(all, labels, cfg.clip_epsilon);
    det += cfg.detectors[i] + "," + opt_real(m.auc) + "," + (m.f ? format_real(m.f->f1) : "") + "," +
           (m.f ? format_real(m.f->threshold) : "") + "," + format_real(m.total_log_loss) + "," +
           format_real(m.total_square_loss) + "\n";
  }
  files["detectors.csv"] = std::move(det);
  files["manifest.json"] = manifest(cfg, "run", corpus.snapshot_hash, files);
  return files;
}

struct BoundsReport {
  FileSet files;
  std::size_t violations = 0;  // theorem-bound violations at any prefix
  std::size_t weight_sum_violations = 0;
};

// Replays the grid and checks, at every prefix, the learner's cumulative
// average loss against the theorem bound for the best superexpert of each
// switch budget, and against -(C/eta) ln W_t.
inline BoundsReport bounds_experiment(const ExperimentConfig& cfg, const LoadedCorpus& corpus) {
  cfg.validate();
  const auto game = cfg.game_spec();
  const auto cells = grid_cells(corpus.series.size(), cfg);
  struct CellOut {
    std::string rows;
    std::vector<std::pair<std::string, std::string>> traces;
    std::size_t violations = 0, weight_violations = 0;
  };
  std::vector<CellOut> outs(cells.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
    const auto& cell = cells[c];
    const auto& cs = corpus.series[cell.series];
    const double alpha = cfg.alphas[cell.alpha];
    const auto kind = delay_for_series(cfg.delays[cell.delay], cfg.seed, cs.key);
    const auto schedule = make_schedule(kind, cs.series.outcomes.size());
    const auto run = replay(cfg.algorithm(alpha), cs.panel.scores, cs.series.outcomes, schedule);
    const auto& led = run.ledger;
    const std::size_t T = led.steps();
    auto& out = outs[c];
    double learner = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      learner += led.per_step_learner_avg_loss[t];
      if (learner > -game.c / game.eta * led.log_weight_sum[t] + 1e-8) ++out.weight_violations;
    }
    const std::string stem = algorithm_label(cfg.method, alpha) + "_" + sanitize(cfg.delays[cell.delay]);
    for (const auto k : cfg.ks) {
      if (k >= T) continue;
      const auto best = best_superexpert(led.per_step_expert_avg_loss, k);
      const auto rs = regret_series(led, best.spec);
      const auto bound = bound_series(led, best.spec, cfg.method, alpha, game);
      std::size_t viol = 0;
      std::string trace = "step,comparator_loss,learner_loss,regret,bound,bound_slack\n";
      for (std::size_t t = 0; t < T; ++t) {
        if (rs.learner_loss[t] > bound[t] + 1e-9) ++viol;
        if (cfg.traces)
          trace += std::to_string(t + 1) + "," + format_real(rs.comparator_loss[t]) + "," +
                   format_real(rs.learner_loss[t]) + "," + format_real(rs.regret[t]) + "," + format_real(bound[t]) +
                   "," + format_real(bound[t] - rs.learner_loss[t]) + "\n";
      }
      std::string experts;
      for (std::size_t j = 0; j < best.spec.experts.size(); ++j)
        experts += (j ? ";" : "") + cfg.detectors[best.spec.experts[j]];
      out.rows += cs.key + "," + to_string(cfg.method) + "," + format_real(alpha) + "," + cfg.delays[cell.delay] + "," +
                  std::to_string(k) + "," + std::to_string(best.spec.switches()) + "," + experts + "," +
                  format_real(best.loss) + "," + format_real(rs.learner_loss.back()) + "," + format_real(bound.back()) +
                  "," + std::to_string(viol) + "\n";
      out.violations += viol;
      if (cfg.traces) out.traces.emplace_back("bounds/" + sanitize(cs.key) + "/" + stem + "_k" + std::to_string(k) + ".csv", std::move(trace));
    }
  });
  BoundsReport rep;
  std::string summary =
      "series,algorithm,alpha,delay,k,switches_used,superexpert,superexpert_loss,learner_loss,bound,prefix_violations\n";
  for (auto& o : outs) {
    summary += o.rows;
    rep.violations += o.violations;
    rep.weight_sum_violations += o.weight_violations;
    for (auto& [p, body] : o.traces) rep.files[p] = std::move(body);
  }
  rep.files["bounds_summary.csv"] = std::move(summary);
  nlohmann::json extra{{"bound_violations", rep.violations}, {"weight_sum_violations", rep.weight_sum_violations}};
  rep.files["manifest.json"] = manifest(cfg, "bounds", corpus.snapshot_hash, rep.files, extra);
  return rep;
}

inline void write_files(const std::filesystem::path& root, const FileSet& files) {
  for (const auto& [rel, body] : files) {
    const auto p = root / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw load_error("cannot write " + p.string());
    out << body;
  }
}

} // namespace delayshare
