#pragma once

// Delay schedules (pack sizes D_t) and slicing of a stream into packs.

#include <charconv>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "delayshare/aggregator.hpp"
#include "delayshare/errors.hpp"
#include "delayshare/matrix.hpp"

namespace delayshare {

struct FixedDelay {
  std::size_t d = 1;
  friend bool operator==(const FixedDelay&, const FixedDelay&) = default;
};

struct RandomDelay {
  std::size_t lo = 1;
  std::size_t hi = 1;
  std::uint64_t seed = 0;
  friend bool operator==(const RandomDelay&, const RandomDelay&) = default;
};

using DelayKind = std::variant<FixedDelay, RandomDelay>;

struct DelaySchedule {
  DelayKind kind;
  std::vector<std::size_t> realized;

  std::size_t total() const noexcept {
    std::size_t s = 0;
    for (auto d : realized) s += d;
    return s;
  }
};

// Reproducible draws: std::mt19937_64 (whose output sequence is fixed by the
// C++ standard) seeded with the given seed, mapped to [lo, hi] by rejection
// sampling on the raw 64-bit word followed by modulo reduction. Any
// implementation of these two steps reproduces the same schedule.
class UniformIntStream {
public:
  explicit UniformIntStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return engine_();  // full 64-bit range
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % span + 1) % span;
    std::uint64_t u;
    do {
      u = engine_();
    } while (u > limit);
    return lo + u % span;
  }

  // Uniform double in [0,1) from the top 53 bits of one engine word.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 engine_;
};

inline DelaySchedule make_schedule(const DelayKind& kind, std::size_t stream_len) {
  if (stream_len == 0) throw domain_error("stream length must be at least 1");
  DelaySchedule s{kind, {}};
  if (const auto* f = std::get_if<FixedDelay>(&kind)) {
    if (f->d < 1) throw domain_error("fixed delay must be at least 1");
    for (std::size_t left = stream_len; left > 0;) {
      const std::size_t d = std::min(f->d, left);
      s.realized.push_back(d);
      left -= d;
    }
    return s;
  }
  const auto& r = std::get<RandomDelay>(kind);
  if (r.lo < 1) throw domain_error("random delay lower bound must be at least 1");
  if (r.lo > r.hi) throw domain_error("random delay requires lo <= hi");
  UniformIntStream rng(r.seed);
  for (std::size_t left = stream_len; left > 0;) {
    const auto d = std::min<std::size_t>(rng.next(r.lo, r.hi), left);
    s.realized.push_back(d);
    left -= d;
  }
  return s;
}

namespace detail {

inline std::uint64_t parse_uint(std::string_view text, std::string_view whole) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty())
    throw config_error("invalid delay schedule '" + std::string(whole) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

} // namespace detail

// Accepts "fixed:D", "random:LO:HI" and "random:LO:HI:seed=S". The default
// seed applies when the string carries none.
inline DelayKind parse_delay_kind(std::string_view text, std::uint64_t default_seed = 0) {
  const auto parts = detail::split(text, ':');
  if (parts.size() == 2 && parts[0] == "fixed") {
    const auto d = detail::parse_uint(parts[1], text);
    if (d < 1) throw config_error("fixed delay must be at least 1");
    return FixedDelay{static_cast<std::size_t>(d)};
  }
  if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "random") {
    RandomDelay r{static_cast<std::size_t>(detail::parse_uint(parts[1], text)),
                  static_cast<std::size_t>(detail::parse_uint(parts[2], text)), default_seed};
    if (parts.size() == 4) {
      if (!parts[3].starts_with("seed=")) throw config_error("invalid delay schedule '" + std::string(text) + "'");
      r.seed = detail::parse_uint(parts[3].substr(5), text);
    }
    if (r.lo < 1 || r.lo > r.hi) throw config_error("random delay needs 1 <= lo <= hi in '" + std::string(text) + "'");
    return r;
  }
  throw config_error("invalid delay schedule '" + std::string(text) + "'");
}

inline std::string to_string(const DelayKind& kind) {
  if (const auto* f = std::get_if<FixedDelay>(&kind)) return "fixed:" + std::to_string(f->d);
  const auto& r = std::get<RandomDelay>(kind);
  return "random:" + std::to_string(r.lo) + ":" + std::to_string(r.hi) + ":seed=" + std::to_string(r.seed);
}

// Contiguous packs in time order. Outcomes are attached but the aggregator
// only reads them after predicting the pack.
inline std::vector<Pack> pack_stream(const Matrix& expert_scores, std::span<const Outcome> outcomes,
                                     const DelaySchedule& schedule) {
  if (outcomes.size() != expert_scores.rows())
    throw domain_error("outcome count " + std::to_string(outcomes.size()) + " differs from stream length " +
                       std::to_string(expert_scores.rows()));
  if (schedule.total() != expert_scores.rows())
    throw domain_error("schedule covers " + std::to_string(schedule.total()) + " slots, stream has " +
                       std::to_string(expert_scores.rows()));
  std::vector<Pack> packs;
  packs.reserve(schedule.realized.size());
  std::size_t first = 0;
  for (const auto d : schedule.realized) {
    if (d == 0) throw domain_error("pack sizes must be positive");
    Pack p;
    p.expert_preds = expert_scores.slice_rows(first, d);
    p.outcomes = std::vector<Outcome>(outcomes.begin() + first, outcomes.begin() + first + d);
    packs.push_back(std::move(p));
    first += d;
  }
  return packs;
}

} // namespace delayshare
