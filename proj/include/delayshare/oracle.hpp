#pragma once

// Superexperts (piecewise-constant expert sequences), the exact best
// superexpert for a switch budget, and the closed-form regret bounds for
// Fixed-share and Variable-share.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "delayshare/aggregator.hpp"
#include "delayshare/errors.hpp"
#include "delayshare/matrix.hpp"

namespace delayshare {

// Segment j covers steps [boundaries[j], boundaries[j+1]) (0-based) and
// follows expert experts[j]. boundaries.front() == 0 and
// boundaries.back() == T.
struct SuperexpertSpec {
  std::vector<std::size_t> boundaries;
  std::vector<std::size_t> experts;

  std::size_t switches() const noexcept { return experts.empty() ? 0 : experts.size() - 1; }
  std::size_t steps() const noexcept { return boundaries.empty() ? 0 : boundaries.back(); }

  // Expert followed at step t.
  std::size_t expert_at(std::size_t t) const {
    for (std::size_t j = 0; j + 1 < boundaries.size(); ++j)
      if (t < boundaries[j + 1]) return experts[j];
    throw domain_error("step " + std::to_string(t) + " beyond superexpert horizon");
  }

  static SuperexpertSpec constant(std::size_t expert, std::size_t t_total) { return {{0, t_total}, {expert}}; }

  void validate(std::size_t t_total, std::size_t n_experts) const {
    if (experts.empty() || boundaries.size() != experts.size() + 1)
      throw domain_error("superexpert needs k+2 boundaries for k+1 segments");
    if (boundaries.front() != 0 || boundaries.back() != t_total)
      throw domain_error("superexpert boundaries must span [0, " + std::to_string(t_total) + ")");
    for (std::size_t j = 0; j + 1 < boundaries.size(); ++j)
      if (boundaries[j] >= boundaries[j + 1]) throw domain_error("superexpert boundaries must be strictly increasing");
    for (std::size_t j = 0; j < experts.size(); ++j) {
      if (experts[j] >= n_experts) throw domain_error("superexpert expert index out of range");
      if (j > 0 && experts[j] == experts[j - 1]) throw domain_error("adjacent superexpert segments repeat an expert");
    }
  }

  friend bool operator==(const SuperexpertSpec&, const SuperexpertSpec&) = default;
};

// Sum over segments of the assigned expert's per-step average losses.
// avg_losses is T x N with entry (t, i) = (1/D_t) sum_d loss(y, xi(i)).
inline double superexpert_avg_loss(const SuperexpertSpec& spec, const Matrix& avg_losses) {
  spec.validate(avg_losses.rows(), avg_losses.cols());
  double total = 0.0;
  for (std::size_t j = 0; j < spec.experts.size(); ++j)
    for (std::size_t t = spec.boundaries[j]; t < spec.boundaries[j + 1]; ++t) total += avg_losses(t, spec.experts[j]);
  return total;
}

struct BestSuperexpert {
  SuperexpertSpec spec;
  double loss = 0.0;
};

namespace detail {

// DP cost: total loss, then switch count. Compared lexicographically.
struct SegCost {
  double loss = std::numeric_limits<double>::infinity();
  std::size_t switches = 0;

  friend bool operator<(const SegCost& a, const SegCost& b) {
    if (a.loss != b.loss) return a.loss < b.loss;
    return a.switches < b.switches;
  }
  friend bool operator==(const SegCost&, const SegCost&) = default;
};

} // namespace detail

// Exact minimizer over all superexperts with at most k switches.
//
// Ties on loss prefer fewer switches, then the lexicographically smallest
// per-step expert sequence. A suffix DP over (step, expert, switches left)
// followed by a greedy forward reconstruction realizes that order in
// O(T * N * k) time.
inline BestSuperexpert best_superexpert(const Matrix& avg_losses, std::size_t k) {
  const std::size_t T = avg_losses.rows();
  const std::size_t N = avg_losses.cols();
  if (T == 0 || N == 0) throw domain_error("empty loss matrix");
  if (k >= T) throw domain_error("switch budget k must be smaller than T");
  const std::size_t K = k + 1;
  using detail::SegCost;
  // cost[(t * N + i) * K + r]: best suffix from step t following expert i at
  // t, with at most r switches available in steps t+1..T-1.
  std::vector<SegCost> cost(T * N * K);
  auto at = [&](std::size_t t, std::size_t i, std::size_t r) -> SegCost& { return cost[(t * N + i) * K + r]; };

  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t r = 0; r < K; ++r) at(T - 1, i, r) = {avg_losses(T - 1, i), 0};

  // Best and runner-up expert at (t+1, r), ordered by (cost, index).
  std::vector<std::size_t> first(K), second(K);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t r = 0; r < K; ++r) {
      std::size_t b1 = N, b2 = N;
      for (std::size_t j = 0; j < N; ++j) {
        const SegCost& c = at(t + 1, j, r);
        if (b1 == N || c < at(t + 1, b1, r)) {
          b2 = b1;
          b1 = j;
        } else if (b2 == N || c < at(t + 1, b2, r)) {
          b2 = j;
        }
      }
      first[r] = b1;
      second[r] = b2;
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t r = 0; r < K; ++r) {
        SegCost best = at(t + 1, i, r);
        if (r > 0) {
          const std::size_t j = first[r - 1] != i ? first[r - 1] : second[r - 1];
          if (j < N) {
            SegCost sw = at(t + 1, j, r - 1);
            sw.switches += 1;
            if (sw < best) best = sw;
          }
        }
        at(t, i, r) = {avg_losses(t, i) + best.loss, best.switches};
      }
    }
  }

  // Forward reconstruction choosing the smallest expert index among optimal
  // continuations.
  std::size_t cur = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (at(0, i, k) < at(0, cur, k)) cur = i;
  BestSuperexpert out;
  out.loss = at(0, cur, k).loss;
  out.spec.boundaries.push_back(0);
  out.spec.experts.push_back(cur);
  std::size_t left = k;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    SegCost best = at(t + 1, cur, left);
    std::size_t next = cur;
    if (left > 0) {
      for (std::size_t j = 0; j < N; ++j) {
        if (j == cur) continue;
        SegCost sw = at(t + 1, j, left - 1);
        sw.switches += 1;
        if (sw < best || (sw == best && j < next)) {
          best = sw;
          next = j;
        }
      }
    }
    if (next != cur) {
      out.spec.boundaries.push_back(t + 1);
      out.spec.experts.push_back(next);
      --left;
      cur = next;
    }
  }
  out.spec.boundaries.push_back(T);
  return out;
}

// Inputs of the closed-form bounds. k_hat, t_hat and l_hat are only read by
// the corollary bounds.
struct BoundInputs {
  double c = 1.0;
  double eta = 1.0;
  std::size_t n_experts = 1;
  std::size_t k = 0;
  std::size_t t_total = 1;
  double alpha = 0.0;
  double superexpert_avg_loss = 0.0;
  std::optional<double> k_hat;
  std::optional<double> t_hat;
  std::optional<double> l_hat;

  static BoundInputs from(const GameSpec& game, std::size_t n, std::size_t k, std::size_t t_total, double alpha,
                          double superexpert_loss) {
    BoundInputs b;
    b.c = game.c;
    b.eta = game.eta;
    b.n_experts = n;
    b.k = k;
    b.t_total = t_total;
    b.alpha = alpha;
    b.superexpert_avg_loss = superexpert_loss;
    return b;
  }
};

inline constexpr double infinite_bound = std::numeric_limits<double>::infinity();

namespace detail {

inline void check_bound_inputs(const BoundInputs& in) {
  if (in.n_experts == 0) throw domain_error("bound needs at least one expert");
  if (in.t_total == 0) throw domain_error("bound needs T >= 1");
  if (in.k >= in.t_total) throw domain_error("bound needs k < T");
  if (in.k > 0 && in.n_experts < 2) throw domain_error("a switching superexpert needs at least two experts");
  if (!(in.alpha >= 0.0 && in.alpha <= 1.0)) throw domain_error("alpha must lie in [0,1]");
  if (!(in.c > 0.0 && in.eta > 0.0)) throw domain_error("C and eta must be positive");
  if (!(in.superexpert_avg_loss >= 0.0)) throw domain_error("superexpert loss must be nonnegative");
}

} // namespace detail

// C L_S + (C/eta) (ln N + k ln((N-1)/alpha) + (T-1-k) ln(1/(1-alpha)))
inline double fixed_share_bound(const BoundInputs& in) {
  detail::check_bound_inputs(in);
  const double n = static_cast<double>(in.n_experts);
  const double k = static_cast<double>(in.k);
  const double stay = static_cast<double>(in.t_total - 1 - in.k);
  if ((in.k > 0 && in.alpha == 0.0) || (stay > 0 && in.alpha == 1.0)) return infinite_bound;
  double regret = std::log(n);
  if (in.k > 0) regret += k * std::log((n - 1.0) / in.alpha);
  if (stay > 0) regret -= stay * std::log1p(-in.alpha);
  return in.c * in.superexpert_avg_loss + in.c / in.eta * regret;
}

// C (1 + (1/eta) ln(1/(1-alpha))) L_S + (C/eta) (ln N + k (eta + ln((N-1)/(alpha (1-alpha)))))
inline double variable_share_bound(const BoundInputs& in) {
  detail::check_bound_inputs(in);
  const double n = static_cast<double>(in.n_experts);
  const double k = static_cast<double>(in.k);
  if (in.alpha == 1.0 || (in.k > 0 && in.alpha == 0.0)) return infinite_bound;
  const double coef = in.c * (1.0 - std::log1p(-in.alpha) / in.eta);
  double regret = std::log(n);
  if (in.k > 0) regret += k * (in.eta + std::log((n - 1.0) / (in.alpha * (1.0 - in.alpha))));
  return coef * in.superexpert_avg_loss + in.c / in.eta * regret;
}

// Theorem bound for the method run; AAP-current is Fixed-share at alpha = 0.
inline double theorem_bound(Method method, const BoundInputs& in) {
  return method == Method::variable_share ? variable_share_bound(in) : fixed_share_bound(in);
}

// alpha = k_hat / (T_hat - 1) for Fixed-share, k_hat / (2 k_hat + L_hat) for
// Variable-share.
inline double tuned_alpha(Method method, double k_hat, double t_hat_or_l_hat) {
  if (!(k_hat > 0.0) || !(t_hat_or_l_hat > 0.0)) throw domain_error("tuning parameters must be positive");
  switch (method) {
    case Method::fixed_share:
      if (!(k_hat < t_hat_or_l_hat - 1.0)) throw domain_error("Fixed-share tuning needs k_hat < T_hat - 1");
      return k_hat / (t_hat_or_l_hat - 1.0);
    case Method::variable_share: return k_hat / (2.0 * k_hat + t_hat_or_l_hat);
    case Method::aap: break;
  }
  throw domain_error("AAP-current has no switching rate to tune");
}

// Bounds obtained by plugging the tuned alpha into the theorem bounds.
// Fixed-share needs T <= T_hat and k >= k_hat. Variable-share needs
// L_S <= L_hat and uses the k_hat < L_hat form below the regime boundary,
// the k_hat >= L_hat form at and above it.
inline double corollary_bound(Method method, const BoundInputs& in) {
  const double n = static_cast<double>(in.n_experts);
  const double k = static_cast<double>(in.k);
  if (in.n_experts == 0) throw domain_error("bound needs at least one expert");
  if (in.k > 0 && in.n_experts < 2) throw domain_error("a switching superexpert needs at least two experts");
  if (!in.k_hat || !(*in.k_hat > 0.0)) throw domain_error("corollary bound needs a positive k_hat");
  const double kh = *in.k_hat;
  const double ln_n1 = in.n_experts > 1 ? std::log(n - 1.0) : 0.0;
  if (method == Method::fixed_share) {
    if (!in.t_hat) throw domain_error("Fixed-share corollary needs T_hat");
    const double th = *in.t_hat;
    if (!(kh < th - 1.0)) throw domain_error("Fixed-share corollary needs k_hat < T_hat - 1");
    if (static_cast<double>(in.t_total) > th) throw domain_error("Fixed-share corollary needs T <= T_hat");
    if (k < kh) throw domain_error("Fixed-share corollary needs k >= k_hat");
    return in.c * in.superexpert_avg_loss + in.c / in.eta * (std::log(n) + k * (std::log((th - 1.0) / kh) + ln_n1) + kh);
  }
  if (method == Method::variable_share) {
    if (!in.l_hat || !(*in.l_hat > 0.0)) throw domain_error("Variable-share corollary needs a positive L_hat");
    const double lh = *in.l_hat;
    if (in.superexpert_avg_loss > lh) throw domain_error("Variable-share corollary needs L_S <= L_hat");
    const double per_switch = ln_n1 + std::log(4.5) + in.eta;
    if (kh < lh)
      return in.c * in.superexpert_avg_loss +
             in.c / in.eta * (std::log(n) + k * (std::log(lh / kh) + per_switch) + kh);
    return in.c * in.superexpert_avg_loss + in.c / in.eta * (std::log(n) + k * per_switch + 0.5 * kh);
  }
  throw domain_error("AAP-current has no corollary bound");
}

} // namespace delayshare
