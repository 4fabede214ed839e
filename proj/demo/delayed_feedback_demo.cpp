// Three synthetic detectors, one of which tracks the anomalies and changes
// every 1000 slots. Prints pooled AUC and the final weights of AAP-current and
// Fixed-share under a delay of 50.

#include <cstdio>

#include "delayshare.hpp"

namespace ds = delayshare;

int main() {
  ds::SynthConfig cfg;
  cfg.seed = 11;
  cfg.n_experts = 3;
  cfg.length = 4000;
  cfg.leader_margin = 0.3;
  cfg.leader_switches = 3;
  const auto inst = ds::make_synthetic(cfg);
  const auto schedule = ds::make_schedule(ds::FixedDelay{50}, cfg.length);

  for (const auto& [name, spec] : {std::pair{"aap", ds::AlgorithmSpec{ds::Method::aap, 0.0, ds::GameSpec::log_loss()}},
                                   std::pair{"fixed", ds::AlgorithmSpec{ds::Method::fixed_share, 0.05,
                                                                        ds::GameSpec::log_loss()}}}) {
    const auto run = ds::replay(spec, inst.scores, inst.outcomes, schedule);
    const auto& w = run.ledger.weights_history;
    std::printf("%-6s auc=%.4f avg-loss=%.3f weights=(%.3f, %.3f, %.3f)\n", name,
                ds::auc(run.ledger.predictions, inst.outcomes),
                ds::cumulative_average_loss(run.ledger, run.ledger.steps()).learner, w(w.rows() - 1, 0),
                w(w.rows() - 1, 1), w(w.rows() - 1, 2));
  }
}
