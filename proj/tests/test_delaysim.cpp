#include <gtest/gtest.h>

#include <random>

#include "delayshare/delaysim.hpp"
#include "delayshare/replay.hpp"

using namespace delayshare;

TEST(MakeSchedule, FixedOne) {
  EXPECT_EQ(make_schedule(FixedDelay{1}, 5).realized, (std::vector<std::size_t>{1, 1, 1, 1, 1}));
}

TEST(MakeSchedule, FixedTruncatesLastPack) {
  EXPECT_EQ(make_schedule(FixedDelay{20}, 50).realized, (std::vector<std::size_t>{20, 20, 10}));
}

TEST(MakeSchedule, RandomIsDeterministicAndCovers) {
  const RandomDelay kind{20, 100, 7};
  const auto a = make_schedule(kind, 1000);
  const auto b = make_schedule(kind, 1000);
  EXPECT_EQ(a.realized, b.realized);
  EXPECT_EQ(a.total(), 1000u);
  for (std::size_t t = 0; t + 1 < a.realized.size(); ++t) {
    EXPECT_GE(a.realized[t], 20u);
    EXPECT_LE(a.realized[t], 100u);
  }
  EXPECT_NE(make_schedule(RandomDelay{20, 100, 8}, 1000).realized, a.realized);
}

TEST(MakeSchedule, RandomDrawsFollowDocumentedAlgorithm) {
  // Rejection sampling on raw mt19937_64 words, then modulo.
  std::mt19937_64 eng(7);
  const std::uint64_t span = 81;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span + 1) % span;
  const auto s = make_schedule(RandomDelay{20, 100, 7}, 100000);
  for (std::size_t t = 0; t + 1 < s.realized.size(); ++t) {
    std::uint64_t u;
    do u = eng(); while (u > limit);
    ASSERT_EQ(s.realized[t], 20 + u % span);
  }
}

TEST(MakeSchedule, Errors) {
  EXPECT_THROW(make_schedule(RandomDelay{0, 5, 1}, 10), domain_error);
  EXPECT_THROW(make_schedule(RandomDelay{6, 5, 1}, 10), domain_error);
  EXPECT_THROW(make_schedule(FixedDelay{3}, 0), domain_error);
}

TEST(ParseDelay, Forms) {
  EXPECT_EQ(std::get<FixedDelay>(parse_delay_kind("fixed:20")).d, 20u);
  const auto r = std::get<RandomDelay>(parse_delay_kind("random:20:100:seed=7"));
  EXPECT_EQ(r, (RandomDelay{20, 100, 7}));
  EXPECT_EQ(std::get<RandomDelay>(parse_delay_kind("random:20:100", 42)).seed, 42u);
  EXPECT_EQ(to_string(parse_delay_kind("random:1:9:seed=3")), "random:1:9:seed=3");
  for (const char* bad : {"fixed:0", "fixed:", "fixed:x", "random:0:4", "random:5:4", "random:1:2:s=3", "burst:3", ""})
    EXPECT_THROW(parse_delay_kind(bad), config_error) << bad;
}

TEST(PackStream, Slicing) {
  Matrix m(7, 2);
  std::vector<Outcome> y(7);
  for (std::size_t s = 0; s < 7; ++s) {
    m(s, 0) = 0.1 * double(s);
    m(s, 1) = 0.05;
    y[s] = int(s % 2);
  }
  DelaySchedule sched{FixedDelay{3}, {3, 3, 1}};
  const auto packs = pack_stream(m, y, sched);
  ASSERT_EQ(packs.size(), 3u);
  EXPECT_EQ(packs[0].size(), 3u);
  EXPECT_EQ(packs[2].size(), 1u);
  EXPECT_DOUBLE_EQ(packs[1].expert_preds(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(packs[2].expert_preds(0, 0), 0.6);
  EXPECT_EQ((*packs[2].outcomes)[0], 0);

  const auto whole = pack_stream(m, y, DelaySchedule{FixedDelay{7}, {7}});
  EXPECT_EQ(whole.size(), 1u);
  EXPECT_EQ(pack_stream(m, y, make_schedule(FixedDelay{1}, 7)).size(), 7u);
}

TEST(PackStream, ConcatenationReproducesStream) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t L = 1 + seed * 37;
    Matrix m(L, 3);
    std::vector<Outcome> y(L);
    for (std::size_t s = 0; s < L; ++s) {
      y[s] = u(rng) < 0.5;
      for (std::size_t i = 0; i < 3; ++i) m(s, i) = u(rng);
    }
    const auto packs = pack_stream(m, y, make_schedule(RandomDelay{1, 9, seed}, L));
    Matrix joined;
    std::vector<Outcome> ys;
    for (const auto& p : packs) {
      for (std::size_t d = 0; d < p.size(); ++d) joined.append_row(p.expert_preds.row(d));
      ys.insert(ys.end(), p.outcomes->begin(), p.outcomes->end());
    }
    EXPECT_EQ(joined, m);
    EXPECT_EQ(ys, y);
  }
}

TEST(PackStream, LengthMismatch) {
  Matrix m(4, 2, 0.5);
  std::vector<Outcome> y(3, 0);
  EXPECT_THROW(pack_stream(m, y, make_schedule(FixedDelay{1}, 4)), domain_error);
  std::vector<Outcome> y4(4, 0);
  EXPECT_THROW(pack_stream(m, y4, make_schedule(FixedDelay{1}, 5)), domain_error);
}

TEST(PackStream, UnitDelayEqualsClassicalOnlineAlgorithm) {
  // With D_t = 1 each prediction uses the weights after every earlier outcome.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t L = 80, N = 3;
  Matrix m(L, N);
  std::vector<Outcome> y(L);
  for (std::size_t s = 0; s < L; ++s) {
    y[s] = u(rng) < 0.4;
    for (std::size_t i = 0; i < N; ++i) m(s, i) = u(rng);
  }
  const AlgorithmSpec spec{Method::aap, 0.0, GameSpec::log_loss()};
  const auto led = replay(spec, m, y, make_schedule(FixedDelay{1}, L)).ledger;
  std::vector<double> w(N, 1.0);
  for (std::size_t s = 0; s < L; ++s) {
    double z = 0.0, g = 0.0;
    for (double v : w) z += v;
    for (std::size_t i = 0; i < N; ++i) g += w[i] / z * m(s, i);
    EXPECT_NEAR(led.predictions[s], g, 1e-12);
    for (std::size_t i = 0; i < N; ++i) w[i] *= y[s] ? m(s, i) : 1.0 - m(s, i);
  }
}
