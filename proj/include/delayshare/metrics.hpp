#pragma once

// Cumulative losses, regret curves and classification metrics.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <variant>
#include <vector>

#include "delayshare/errors.hpp"
#include "delayshare/games.hpp"
#include "delayshare/matrix.hpp"
#include "delayshare/oracle.hpp"

namespace delayshare {

// Everything recorded while replaying one series. T is the number of packs,
// L the number of slots.
struct RunLedger {
  std::vector<std::size_t> pack_sizes;          // T
  std::vector<double> per_step_learner_avg_loss;  // T
  Matrix per_step_expert_avg_loss;              // T x N
  std::vector<double> learner_slot_losses;      // L
  Matrix weights_history;                       // T x N, normalized w~*_t after step t
  std::vector<double> log_weight_sum;           // T, ln W_t
  std::vector<double> predictions;              // L

  std::size_t steps() const noexcept { return per_step_learner_avg_loss.size(); }
  std::size_t n_experts() const noexcept { return per_step_expert_avg_loss.cols(); }
};

struct CumulativeAverage {
  double learner = 0.0;
  std::vector<double> experts;
};

inline void check_prefix(const RunLedger& ledger, std::size_t upto_t) {
  if (upto_t < 1 || upto_t > ledger.steps())
    throw domain_error("prefix length " + std::to_string(upto_t) + " outside [1, " + std::to_string(ledger.steps()) + "]");
}

// Sum over the first upto_t packs of the per-pack mean loss.
inline CumulativeAverage cumulative_average_loss(const RunLedger& ledger, std::size_t upto_t) {
  check_prefix(ledger, upto_t);
  CumulativeAverage out;
  out.experts.assign(ledger.n_experts(), 0.0);
  for (std::size_t t = 0; t < upto_t; ++t) {
    out.learner += ledger.per_step_learner_avg_loss[t];
    for (std::size_t i = 0; i < ledger.n_experts(); ++i) out.experts[i] += ledger.per_step_expert_avg_loss(t, i);
  }
  return out;
}

// Plain sum of the learner's slot losses over the first upto_t packs.
inline double cumulative_loss(const RunLedger& ledger, std::size_t upto_t) {
  check_prefix(ledger, upto_t);
  const std::size_t slots = std::accumulate(ledger.pack_sizes.begin(), ledger.pack_sizes.begin() + upto_t, std::size_t{0});
  return std::accumulate(ledger.learner_slot_losses.begin(), ledger.learner_slot_losses.begin() + slots, 0.0);
}

inline void check_labels(std::span<const double> scores, std::span<const Outcome> labels) {
  if (scores.size() != labels.size()) throw dimension_error("scores and labels differ in length");
  for (auto y : labels)
    if (y != 0 && y != 1) throw domain_error("labels must be binary");
}

// P(score+ > score-) + P(tie)/2 from rank sums with midranks on ties.
inline double auc(std::span<const double> scores, std::span<const Outcome> labels) {
  check_labels(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) ++hi;
    // Ranks lo+1 .. hi share the midrank.
    const double mid = (static_cast<double>(lo + 1) + static_cast<double>(hi)) / 2.0;
    for (std::size_t r = lo; r < hi; ++r)
      if (labels[order[r]] == 1) {
        pos_rank_sum += mid;
        ++n_pos;
      }
    lo = hi;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw undefined_metric_error("AUC needs both positive and negative labels");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct FScore {
  double f1 = 0.0;
  double threshold = 0.0;
};

// Best F1 over thresholds {distinct scores} plus one above the maximum,
// predicting positive when score >= threshold. Ties go to the smallest
// threshold.
inline FScore max_f_score(std::span<const double> scores, std::span<const Outcome> labels) {
  check_labels(scores, labels);
  const std::size_t n = scores.size();
  const std::size_t total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (total_pos == 0) throw undefined_metric_error("F-score needs at least one positive label");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double top = n ? scores[order.front()] : 0.0;
  // Sentinel: nothing predicted positive, F1 = 0.
  FScore best{0.0, std::nextafter(top, std::numeric_limits<double>::infinity())};
  std::size_t tp = 0, predicted = 0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) {
      tp += labels[order[hi]] == 1;
      ++hi;
    }
    predicted = hi;
    const double f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + total_pos);
    // Thresholds descend, so >= keeps the smallest one among ties.
    if (f1 >= best.f1) best = {f1, scores[order[lo]]};
    lo = hi;
  }
  return best;
}

using Comparator = std::variant<std::size_t, SuperexpertSpec>;

struct RegretSeries {
  std::vector<double> comparator_loss;  // L_t^average(comparator)
  std::vector<double> learner_loss;     // L_t^average
  std::vector<double> regret;           // comparator - learner; positive => learner ahead
};

inline RegretSeries regret_series(const RunLedger& ledger, const Comparator& comparator) {
  const std::size_t T = ledger.steps();
  std::vector<std::size_t> follow(T);
  if (const auto* e = std::get_if<std::size_t>(&comparator)) {
    if (*e >= ledger.n_experts()) throw domain_error("comparator expert index out of range");
    std::fill(follow.begin(), follow.end(), *e);
  } else {
    const auto& s = std::get<SuperexpertSpec>(comparator);
    s.validate(T, ledger.n_experts());
    for (std::size_t t = 0; t < T; ++t) follow[t] = s.expert_at(t);
  }
  RegretSeries r;
  r.comparator_loss.resize(T);
  r.learner_loss.resize(T);
  r.regret.resize(T);
  double comp = 0.0, learner = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    comp += ledger.per_step_expert_avg_loss(t, follow[t]);
    learner += ledger.per_step_learner_avg_loss[t];
    r.comparator_loss[t] = comp;
    r.learner_loss[t] = learner;
    r.regret[t] = comp - learner;
  }
  return r;
}

// Theorem bound on L_t^average for every prefix t of the run, against the
// comparator truncated to that prefix.
inline std::vector<double> bound_series(const RunLedger& ledger, const Comparator& comparator, Method method,
                                        double alpha, const GameSpec& game) {
  const auto rs = regret_series(ledger, comparator);
  std::vector<std::size_t> cuts;
  if (const auto* s = std::get_if<SuperexpertSpec>(&comparator))
    cuts.assign(s->boundaries.begin() + 1, s->boundaries.end() - 1);
  std::vector<double> out(rs.comparator_loss.size());
  std::size_t k = 0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    while (k < cuts.size() && cuts[k] <= t) ++k;
    out[t] = theorem_bound(method, BoundInputs::from(game, ledger.n_experts(), k, t + 1, alpha, rs.comparator_loss[t]));
  }
  return out;
}

} // namespace delayshare
