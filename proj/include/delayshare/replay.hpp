#pragma once

// Full replay of one stream through an aggregator under a delay schedule.

#include <span>
#include <vector>

#include "delayshare/aggregator.hpp"
#include "delayshare/delaysim.hpp"
#include "delayshare/metrics.hpp"

namespace delayshare {

struct ReplayOptions {
  // Also keep log w_t and w~_t for every step (trajectory inspection).
  bool keep_log_weights = false;
};

struct Replay {
  RunLedger ledger;
  std::vector<std::vector<double>> log_intermediate;  // T entries of log w_t
  std::vector<std::vector<double>> log_share;         // T+1 entries of log w~_t, starting at t = 0
};

inline Replay replay(const AlgorithmSpec& spec, const Matrix& expert_scores, std::span<const Outcome> outcomes,
                     const DelaySchedule& schedule, ReplayOptions options = {}) {
  const auto packs = pack_stream(expert_scores, outcomes, schedule);
  const std::size_t n = expert_scores.cols();
  auto state = init(n, spec);
  Replay out;
  RunLedger& led = out.ledger;
  led.per_step_expert_avg_loss = Matrix(packs.size(), n);
  led.weights_history = Matrix(packs.size(), n);
  led.pack_sizes.reserve(packs.size());
  led.per_step_learner_avg_loss.reserve(packs.size());
  led.log_weight_sum.reserve(packs.size());
  led.learner_slot_losses.reserve(expert_scores.rows());
  led.predictions.reserve(expert_scores.rows());
  if (options.keep_log_weights) out.log_share.push_back(state.log_w_tilde);
  for (std::size_t t = 0; t < packs.size(); ++t) {
    auto r = step(state, spec, packs[t]);
    led.pack_sizes.push_back(packs[t].size());
    double sum = 0.0;
    for (double l : r.learner_losses) sum += l;
    led.per_step_learner_avg_loss.push_back(sum / static_cast<double>(packs[t].size()));
    for (std::size_t i = 0; i < n; ++i) led.per_step_expert_avg_loss(t, i) = r.expert_avg_losses[i];
    led.learner_slot_losses.insert(led.learner_slot_losses.end(), r.learner_losses.begin(), r.learner_losses.end());
    led.predictions.insert(led.predictions.end(), r.learner_preds.begin(), r.learner_preds.end());
    state = std::move(r.state);
    const auto w = state.normalized();
    for (std::size_t i = 0; i < n; ++i) led.weights_history(t, i) = w[i];
    led.log_weight_sum.push_back(state.log_total());
    if (options.keep_log_weights) {
      out.log_intermediate.push_back(std::move(r.log_intermediate));
      out.log_share.push_back(state.log_w_tilde);
    }
  }
  return out;
}

} // namespace delayshare
