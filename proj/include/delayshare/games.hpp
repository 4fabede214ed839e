#pragma once

// Mixable binary-outcome games: log-loss and square-loss over predictions in [0,1].

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "delayshare/errors.hpp"

namespace delayshare {

enum class LossKind { log_loss, square_loss };

inline const char* to_string(LossKind k) { return k == LossKind::log_loss ? "log" : "square"; }

// A game together with its learning rate, mixability constant and the
// probability clipping used for log-loss.
struct GameSpec {
  LossKind kind = LossKind::log_loss;
  double eta = 1.0;
  double c = 1.0;
  double clip_epsilon = 1e-6;

  static GameSpec log_loss(double clip_epsilon = 1e-6) {
    return custom(LossKind::log_loss, 1.0, 1.0, clip_epsilon);
  }
  static GameSpec square_loss() { return custom(LossKind::square_loss, 2.0, 1.0, 1e-6); }

  // Non-default learning rate or constant. The caller is responsible for C
  // being admissible for eta.
  static GameSpec custom(LossKind kind, double eta, double c, double clip_epsilon = 1e-6) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw config_error("eta must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) throw config_error("mixability constant must be positive");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) throw config_error("clip_epsilon must lie in (0, 0.5)");
    return GameSpec{kind, eta, c, clip_epsilon};
  }

  // True when every per-slot loss lies in [0,1] for binary outcomes.
  bool bounded_loss() const noexcept { return kind == LossKind::square_loss; }
};

using Outcome = int;

namespace detail {

inline void check_outcome(Outcome y) {
  if (y != 0 && y != 1) throw domain_error("outcome must be 0 or 1, got " + std::to_string(y));
}

inline void check_unit(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw domain_error(std::string(what) + " outside [0,1]: " + std::to_string(p));
}

} // namespace detail

// Identity for square-loss; clamps into [eps, 1-eps] for log-loss.
inline double clip_prediction(const GameSpec& game, double p) {
  if (game.kind == LossKind::square_loss) return p;
  return std::clamp(p, game.clip_epsilon, 1.0 - game.clip_epsilon);
}

inline double loss(const GameSpec& game, Outcome y, double gamma) {
  detail::check_outcome(y);
  detail::check_unit(gamma, "prediction");
  if (game.kind == LossKind::square_loss) {
    const double d = static_cast<double>(y) - gamma;
    return d * d;
  }
  const double p = clip_prediction(game, gamma);
  return y == 1 ? -std::log(p) : -std::log1p(-p);
}

// log(sum(exp(x))) with the max shifted out. Returns -inf for an empty span
// or all -inf entries.
inline double log_sum_exp(std::span<const double> x) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : x) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : x) s += std::exp(v - hi);
  return hi + std::log(s);
}

namespace detail {

inline void check_preds(std::span<const double> preds) {
  if (preds.empty()) throw domain_error("empty expert list");
  for (double p : preds) check_unit(p, "expert prediction");
}

inline void check_normalized(std::span<const double> weights, std::size_t n) {
  if (weights.size() != n) throw dimension_error("weights/predictions length mismatch");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw invariant_error("weights must be finite and nonnegative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw invariant_error("weights do not sum to 1 (sum=" + std::to_string(s) + ")");
}

inline std::vector<double> log_of(std::span<const double> w) {
  std::vector<double> out(w.size());
  std::transform(w.begin(), w.end(), out.begin(), [](double v) { return std::log(v); });
  return out;
}

// g(y) for weights given as (possibly unnormalized) logs. Inputs are
// assumed validated.
inline double generalized_prediction_log(const GameSpec& game, std::span<const double> log_w,
                                         std::span<const double> preds, Outcome y) {
  std::vector<double> terms(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    terms[i] = log_w[i] - game.eta * loss(game, y, preds[i]);
  return -(log_sum_exp(terms) - log_sum_exp(log_w)) / game.eta;
}

inline double substitute_log(const GameSpec& game, std::span<const double> log_w,
                             std::span<const double> preds) {
  if (game.kind == LossKind::log_loss) {
    const double norm = log_sum_exp(log_w);
    double gamma = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      gamma += std::exp(log_w[i] - norm) * clip_prediction(game, preds[i]);
    // A convex combination of clipped values stays clipped up to rounding.
    return clip_prediction(game, gamma);
  }
  const double g1 = generalized_prediction_log(game, log_w, preds, 1);
  const double g0 = generalized_prediction_log(game, log_w, preds, 0);
  return std::clamp(0.5 - (g1 - g0) / 2.0, 0.0, 1.0);
}

} // namespace detail

// g(y) = -(1/eta) ln sum_i w_i exp(-eta * loss(y, xi_i)) for normalized weights.
inline double generalized_prediction(const GameSpec& game, std::span<const double> weights,
                                     std::span<const double> preds, Outcome y) {
  detail::check_preds(preds);
  detail::check_normalized(weights, preds.size());
  detail::check_outcome(y);
  const auto log_w = detail::log_of(weights);
  return detail::generalized_prediction_log(game, log_w, preds, y);
}

// Learner prediction satisfying loss(y, gamma) <= C g(y) for both outcomes:
// the weighted mean for log-loss, 1/2 - (g(1) - g(0))/2 for square-loss.
inline double substitute(const GameSpec& game, std::span<const double> weights,
                         std::span<const double> preds) {
  detail::check_preds(preds);
  detail::check_normalized(weights, preds.size());
  const auto log_w = detail::log_of(weights);
  return detail::substitute_log(game, log_w, preds);
}

struct MixabilityReport {
  bool holds = false;
  // C g(y) - loss(y, gamma), indexed by outcome.
  std::array<double, 2> slack{};
};

inline MixabilityReport mixability_holds(const GameSpec& game, std::span<const double> weights,
                                         std::span<const double> preds, double gamma) {
  detail::check_preds(preds);
  detail::check_normalized(weights, preds.size());
  detail::check_unit(gamma, "learner prediction");
  const auto log_w = detail::log_of(weights);
  MixabilityReport r;
  r.holds = true;
  for (Outcome y : {0, 1}) {
    const double bound = game.c * detail::generalized_prediction_log(game, log_w, preds, y);
    r.slack[y] = bound - loss(game, y, gamma);
    if (r.slack[y] < -1e-9) r.holds = false;
  }
  return r;
}

} // namespace delayshare
