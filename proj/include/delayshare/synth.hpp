#pragma once

// Seeded synthetic expert/outcome streams, and their serialization as a
// small corpus in the same layout the loaders read.

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delayshare/dataio.hpp"
#include "delayshare/delaysim.hpp"
#include "delayshare/matrix.hpp"

namespace delayshare {

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_experts = 5;
  std::size_t length = 200;
  // Probability per slot of entering / leaving an anomaly window.
  double p_enter = 0.02;
  double p_exit = 0.2;
  // When > 0, one expert at a time tracks the outcome with this accuracy
  // margin and the tracking expert changes this many times over the stream.
  // With 0 every score is independent U[0,1].
  double leader_margin = 0.0;
  std::size_t leader_switches = 0;
};

struct SynthInstance {
  Matrix scores;  // length x n_experts
  std::vector<Outcome> outcomes;
};

inline SynthInstance make_synthetic(const SynthConfig& cfg) {
  if (cfg.n_experts == 0 || cfg.length == 0) throw config_error("synthetic instance needs N >= 1 and length >= 1");
  if (!(cfg.leader_margin >= 0.0 && cfg.leader_margin <= 0.5)) throw config_error("leader margin must lie in [0, 0.5]");
  UniformIntStream rng(cfg.seed);
  SynthInstance inst{Matrix(cfg.length, cfg.n_experts), std::vector<Outcome>(cfg.length, 0)};
  Outcome state = 0;
  for (std::size_t t = 0; t < cfg.length; ++t) {
    const double u = rng.next_unit();
    state = state == 0 ? (u < cfg.p_enter ? 1 : 0) : (u < cfg.p_exit ? 0 : 1);
    inst.outcomes[t] = state;
  }
  std::vector<std::size_t> leader(cfg.length, 0);
  if (cfg.leader_margin > 0.0) {
    std::size_t cur = rng.next(0, cfg.n_experts - 1);
    const std::size_t seg = cfg.length / (cfg.leader_switches + 1);
    for (std::size_t t = 0; t < cfg.length; ++t) {
      if (cfg.n_experts > 1 && seg > 0 && t > 0 && t % seg == 0 && t / seg <= cfg.leader_switches)
        cur = (cur + 1 + rng.next(0, cfg.n_experts - 2)) % cfg.n_experts;
      leader[t] = cur;
    }
  }
  for (std::size_t t = 0; t < cfg.length; ++t) {
    for (std::size_t i = 0; i < cfg.n_experts; ++i) {
      double s = rng.next_unit();
      if (cfg.leader_margin > 0.0 && leader[t] == i) {
        // Push the score toward the outcome.
        s = inst.outcomes[t] == 1 ? 1.0 - cfg.leader_margin * s : cfg.leader_margin * s;
      }
      inst.scores(t, i) = s;
    }
  }
  return inst;
}

// Relative path -> file content.
using FileSet = std::map<std::string, std::string>;

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Writes `instances` seeded streams (seed, seed+1, ...) as a corpus under
// category "synthetic" with detectors expert_0 .. expert_{N-1}.
inline FileSet synthetic_corpus(const SynthConfig& base, std::size_t instances) {
  FileSet files;
  nlohmann::json windows = nlohmann::json::object();
  const Instant start = *parse_timestamp("2020-01-01 00:00:00");
  const Instant step = 300LL * 1'000'000;
  for (std::size_t k = 0; k < instances; ++k) {
    SynthConfig cfg = base;
    cfg.seed = base.seed + k;
    const auto inst = make_synthetic(cfg);
    char name[32];
    std::snprintf(name, sizeof name, "inst_%04zu", k);
    const std::string key = std::string("synthetic/") + name + ".csv";
    std::string data = "timestamp,value\n";
    std::vector<std::string> results(cfg.n_experts, "timestamp,value,anomaly_score,label\n");
    nlohmann::json wins = nlohmann::json::array();
    std::size_t run_start = 0;
    for (std::size_t t = 0; t < cfg.length; ++t) {
      const std::string ts = format_timestamp(start + static_cast<Instant>(t) * step);
      const std::string val = std::to_string(inst.outcomes[t]);
      data += ts + "," + val + "\n";
      for (std::size_t i = 0; i < cfg.n_experts; ++i)
        results[i] += ts + "," + val + "," + format_real(inst.scores(t, i)) + "," + val + "\n";
      if (inst.outcomes[t] == 1 && (t == 0 || inst.outcomes[t - 1] == 0)) run_start = t;
      if (inst.outcomes[t] == 1 && (t + 1 == cfg.length || inst.outcomes[t + 1] == 0))
        wins.push_back({format_timestamp(start + static_cast<Instant>(run_start) * step),
                        format_timestamp(start + static_cast<Instant>(t) * step)});
    }
    files["data/" + key] = std::move(data);
    for (std::size_t i = 0; i < cfg.n_experts; ++i) {
      const std::string det = "expert_" + std::to_string(i);
      files["results/" + det + "/synthetic/" + det + "_" + name + ".csv"] = std::move(results[i]);
    }
    windows[key] = std::move(wins);
  }
  files["labels/combined_windows.json"] = windows.dump(2) + "\n";
  return files;
}

} // namespace delayshare
