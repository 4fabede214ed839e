#pragma once

// Aggregating Algorithm for pack averages under delayed feedback, with the
// Fixed-share and Variable-share weight-sharing updates.
//
// Weights are kept as unnormalized logs. The initial weights are 1/N each,
// so the total weight W_t = sum_i w~_t(i) starts at 1 and is never
// renormalized; normalization happens only when forming predictions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delayshare/errors.hpp"
#include "delayshare/games.hpp"
#include "delayshare/matrix.hpp"

namespace delayshare {

enum class Method { aap, fixed_share, variable_share };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::aap: return "aap";
    case Method::fixed_share: return "fixed";
    case Method::variable_share: return "variable";
  }
  return "?";
}

struct AlgorithmSpec {
  Method method = Method::aap;
  double alpha = 0.0;
  GameSpec game{};

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw config_error("alpha must lie in [0,1)");
    if (method == Method::aap && alpha != 0.0) throw config_error("AAP-current takes no switching rate");
    if (method == Method::variable_share && !game.bounded_loss())
      throw config_error("Variable-share requires a game with per-slot losses in [0,1] (use square-loss)");
  }
};

struct WeightState {
  std::vector<double> log_w_tilde;
  std::size_t step = 0;

  std::size_t n_experts() const noexcept { return log_w_tilde.size(); }

  // ln W_t, the log of the unnormalized total weight.
  double log_total() const { return log_sum_exp(log_w_tilde); }

  std::vector<double> normalized() const {
    const double z = log_total();
    std::vector<double> w(log_w_tilde.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w_tilde[i] - z);
    return w;
  }

  friend bool operator==(const WeightState&, const WeightState&) = default;
};

// One feedback round: D prediction slots, each with N expert scores.
struct Pack {
  Matrix expert_preds;                         // D x N
  std::vector<double> learner_preds;           // filled by step()
  std::optional<std::vector<Outcome>> outcomes;  // revealed after prediction

  std::size_t size() const noexcept { return expert_preds.rows(); }
};

inline WeightState init(std::size_t n_experts, const AlgorithmSpec& spec) {
  if (n_experts == 0) throw domain_error("at least one expert is required");
  spec.validate();
  return WeightState{std::vector<double>(n_experts, -std::log(static_cast<double>(n_experts))), 0};
}

namespace detail {

inline void check_pack_shape(const WeightState& state, const Matrix& preds) {
  if (preds.rows() == 0) throw domain_error("pack must contain at least one slot");
  if (preds.cols() != state.n_experts())
    throw dimension_error("pack has " + std::to_string(preds.cols()) + " expert columns, expected " +
                          std::to_string(state.n_experts()));
}

inline const std::vector<Outcome>& require_outcomes(const Pack& pack) {
  if (!pack.outcomes) throw protocol_error("outcomes for this pack have not been revealed");
  if (pack.outcomes->size() != pack.size()) throw dimension_error("outcome count differs from pack size");
  return *pack.outcomes;
}

// log(exp(a) + exp(b)) tolerant of -inf operands.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// Shared core of both share updates: expert i keeps keep[i] of its weight
// and gives give[i] = 1 - keep[i] away, split evenly among the other N-1.
inline std::vector<double> share_update(std::span<const double> log_w, std::span<const double> keep) {
  const std::size_t n = log_w.size();
  if (n <= 1) return {log_w.begin(), log_w.end()};
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : log_w) hi = std::max(hi, v);
  std::vector<double> given(n);
  for (std::size_t i = 0; i < n; ++i) given[i] = (1.0 - keep[i]) * std::exp(log_w[i] - hi);
  // Pool excluding i, from prefix and suffix sums to avoid pool - own cancellation.
  std::vector<double> prefix(n + 1, 0.0), suffix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + given[i];
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + given[i];
  std::vector<double> out(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double received = (prefix[i] + suffix[i + 1]) / denom;
    const double kept = std::log(keep[i]) + log_w[i];
    out[i] = received > 0.0 ? log_add(kept, std::log(received) + hi) : kept;
  }
  return out;
}

} // namespace detail

// Learner predictions for every slot of a pack from the current normalized
// share weights. The state is not modified.
inline std::vector<double> predict_pack(const WeightState& state, const AlgorithmSpec& spec,
                                        const Matrix& expert_preds) {
  detail::check_pack_shape(state, expert_preds);
  std::vector<double> gammas(expert_preds.rows());
  for (std::size_t d = 0; d < expert_preds.rows(); ++d) {
    const auto row = expert_preds.row(d);
    detail::check_preds(row);
    gammas[d] = detail::substitute_log(spec.game, state.log_w_tilde, row);
  }
  return gammas;
}

// Per-expert mean loss over the pack slots (clipped under log-loss).
inline std::vector<double> pack_average_losses(const GameSpec& game, const Pack& pack) {
  const auto& ys = detail::require_outcomes(pack);
  const std::size_t n = pack.expert_preds.cols();
  std::vector<double> avg(n, 0.0);
  for (std::size_t d = 0; d < pack.size(); ++d)
    for (std::size_t i = 0; i < n; ++i) avg[i] += loss(game, ys[d], pack.expert_preds(d, i));
  for (double& a : avg) a /= static_cast<double>(pack.size());
  return avg;
}

// log w_t(i) = log w~_{t-1}(i) - (eta / D) sum_d loss(y_d, xi_d(i))
inline std::vector<double> intermediate_update(const WeightState& state, const AlgorithmSpec& spec,
                                               const Pack& pack) {
  detail::check_pack_shape(state, pack.expert_preds);
  const auto avg = pack_average_losses(spec.game, pack);
  std::vector<double> out(state.n_experts());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = state.log_w_tilde[i] - spec.game.eta * avg[i];
  return out;
}

// w~(i) = (1 - alpha) w(i) + alpha/(N-1) sum_{j != i} w(j); identity for N = 1.
inline std::vector<double> fixed_share_update(std::span<const double> log_w, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("alpha must lie in [0,1)");
  if (alpha == 0.0) return {log_w.begin(), log_w.end()};
  const std::vector<double> keep(log_w.size(), 1.0 - alpha);
  return detail::share_update(log_w, keep);
}

// w~(i) = (1-alpha)^{l(i)} w(i) + sum_{j != i} (1 - (1-alpha)^{l(j)}) / (N-1) w(j)
// where l(i) is expert i's mean loss over the pack.
inline std::vector<double> variable_share_update(std::span<const double> log_w, double alpha,
                                                 std::span<const double> avg_losses) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("alpha must lie in [0,1)");
  if (avg_losses.size() != log_w.size()) throw dimension_error("one average loss per expert is required");
  std::vector<double> keep(log_w.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const double l = avg_losses[i];
    if (!(l >= -1e-12 && l <= 1.0 + 1e-12))
      throw bounded_loss_error("pack-average loss " + std::to_string(l) + " of expert " + std::to_string(i) +
                               " is outside [0,1]");
    keep[i] = std::pow(1.0 - alpha, std::clamp(l, 0.0, 1.0));
  }
  if (alpha == 0.0) return {log_w.begin(), log_w.end()};
  return detail::share_update(log_w, keep);
}

struct StepResult {
  std::vector<double> learner_preds;
  std::vector<double> learner_losses;
  std::vector<double> expert_avg_losses;
  std::vector<double> log_intermediate;  // log w_t before sharing
  WeightState state;                     // w~_t
};

// One full round: predict every slot, reveal outcomes, update, share.
inline StepResult step(const WeightState& state, const AlgorithmSpec& spec, const Pack& pack) {
  spec.validate();
  StepResult r;
  r.learner_preds = predict_pack(state, spec, pack.expert_preds);
  const auto& ys = detail::require_outcomes(pack);
  r.learner_losses.resize(pack.size());
  for (std::size_t d = 0; d < pack.size(); ++d) r.learner_losses[d] = loss(spec.game, ys[d], r.learner_preds[d]);
  r.expert_avg_losses = pack_average_losses(spec.game, pack);
  r.log_intermediate.resize(state.n_experts());
  for (std::size_t i = 0; i < state.n_experts(); ++i)
    r.log_intermediate[i] = state.log_w_tilde[i] - spec.game.eta * r.expert_avg_losses[i];
  switch (spec.method) {
    case Method::aap: r.state.log_w_tilde = r.log_intermediate; break;
    case Method::fixed_share: r.state.log_w_tilde = fixed_share_update(r.log_intermediate, spec.alpha); break;
    case Method::variable_share:
      r.state.log_w_tilde = variable_share_update(r.log_intermediate, spec.alpha, r.expert_avg_losses);
      break;
  }
  r.state.step = state.step + 1;
  return r;
}

} // namespace delayshare
