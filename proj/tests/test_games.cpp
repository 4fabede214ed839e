#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "delayshare/games.hpp"

using namespace delayshare;

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = e(rng);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= s;
  // Pin the sum to exactly one within the 1e-12 contract.
  w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
  return w;
}

} // namespace

TEST(Loss, LogLossOfHalfIsLn2) { EXPECT_NEAR(loss(GameSpec::log_loss(), 1, 0.5), std::log(2.0), 1e-15); }

TEST(Loss, SquareLoss) { EXPECT_DOUBLE_EQ(loss(GameSpec::square_loss(), 1, 0.25), 0.5625); }

TEST(Loss, LogLossClipsZeroPrediction) {
  // -ln(1e-6), evaluated with mpmath.
  EXPECT_NEAR(loss(GameSpec::log_loss(1e-6), 1, 0.0), 13.815510557964274, 1e-9);
  EXPECT_TRUE(std::isfinite(loss(GameSpec::log_loss(), 0, 1.0)));
}

TEST(Loss, RejectsOutOfDomain) {
  EXPECT_THROW(loss(GameSpec::log_loss(), 1, 1.5), domain_error);
  EXPECT_THROW(loss(GameSpec::square_loss(), 1, -0.1), domain_error);
  EXPECT_THROW(loss(GameSpec::square_loss(), 2, 0.1), domain_error);
  EXPECT_THROW(loss(GameSpec::square_loss(), 1, std::nan("")), domain_error);
}

TEST(GameSpec, Defaults) {
  const auto lg = GameSpec::log_loss();
  EXPECT_EQ(lg.eta, 1.0);
  EXPECT_EQ(lg.c, 1.0);
  const auto sq = GameSpec::square_loss();
  EXPECT_EQ(sq.eta, 2.0);
  EXPECT_EQ(sq.c, 1.0);
  EXPECT_THROW(GameSpec::log_loss(0.5), config_error);
  EXPECT_THROW(GameSpec::custom(LossKind::log_loss, -1.0, 1.0), config_error);
}

TEST(GeneralizedPrediction, SingleExpertCollapses) {
  const std::vector<double> w{1.0}, xi{0.3};
  EXPECT_NEAR(generalized_prediction(GameSpec::log_loss(), w, xi, 1), -std::log(0.3), 1e-12);
}

TEST(GeneralizedPrediction, IdenticalPredictions) {
  const std::vector<double> w{0.5, 0.5}, xi{0.7, 0.7};
  EXPECT_NEAR(generalized_prediction(GameSpec::square_loss(), w, xi, 0), 0.49, 1e-12);
}

TEST(GeneralizedPrediction, TwoExpertSquareLossReference) {
  // Reference values from a 40-digit mpmath evaluation.
  const std::vector<double> w{0.8, 0.2}, xi{0.2, 0.9};
  EXPECT_NEAR(generalized_prediction(GameSpec::square_loss(), w, xi, 1), 0.43557554587886752, 1e-13);
  EXPECT_NEAR(generalized_prediction(GameSpec::square_loss(), w, xi, 0), 0.12546758208144000, 1e-13);
}

TEST(GeneralizedPrediction, Errors) {
  const std::vector<double> empty;
  EXPECT_THROW(generalized_prediction(GameSpec::log_loss(), empty, empty, 1), domain_error);
  const std::vector<double> w{0.5, 0.4}, xi{0.1, 0.2};
  EXPECT_THROW(generalized_prediction(GameSpec::log_loss(), w, xi, 1), invariant_error);
  const std::vector<double> w3{0.5, 0.25, 0.25};
  EXPECT_THROW(generalized_prediction(GameSpec::log_loss(), w3, xi, 1), dimension_error);
}

TEST(Substitute, LogLossWeightedMean) {
  const std::vector<double> w{0.25, 0.75}, xi{0.0, 1.0};
  // Clipping moves the endpoints by 1e-6.
  EXPECT_NEAR(substitute(GameSpec::log_loss(), w, xi), 0.75, 1e-6);
  const std::vector<double> xi2{0.2, 0.6};
  EXPECT_NEAR(substitute(GameSpec::log_loss(), std::vector<double>{0.5, 0.5}, xi2), 0.4, 1e-15);
}

TEST(Substitute, SquareLossSymmetric) {
  const std::vector<double> w{0.5, 0.5}, xi{0.0, 1.0};
  EXPECT_NEAR(substitute(GameSpec::square_loss(), w, xi), 0.5, 1e-15);
}

TEST(Substitute, SquareLossReference) {
  const std::vector<double> w{0.8, 0.2}, xi{0.2, 0.9};
  EXPECT_NEAR(substitute(GameSpec::square_loss(), w, xi), 0.34494601810128624, 1e-13);
}

TEST(Substitute, SquareLossIdenticalExpertsReturnTheirPrediction) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double p = u(rng);
    const auto w = random_simplex(rng, 4);
    const std::vector<double> xi(4, p);
    EXPECT_NEAR(substitute(GameSpec::square_loss(), w, xi), p, 1e-12);
  }
}

TEST(Mixability, SingleExpertHasZeroSlack) {
  const std::vector<double> w{1.0}, xi{0.37};
  for (const auto& g : {GameSpec::log_loss(), GameSpec::square_loss()}) {
    const auto r = mixability_holds(g, w, xi, 0.37);
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.slack[0], 0.0, 1e-12);
    EXPECT_NEAR(r.slack[1], 0.0, 1e-12);
  }
}

TEST(Mixability, LogLossSubstitutionIsExact) {
  const std::vector<double> w{0.5, 0.5}, xi{0.1, 0.9};
  const auto g = GameSpec::log_loss();
  EXPECT_TRUE(mixability_holds(g, w, xi, substitute(g, w, xi)).holds);
}

TEST(Mixability, PerturbedSquareLossFailsForZeroOutcome) {
  // gamma* = 0.17398..., g(0) = 0.04608..., (gamma* + 0.2)^2 = 0.13986... (mpmath).
  const std::vector<double> w{0.9, 0.1}, xi{0.05, 0.95};
  const auto g = GameSpec::square_loss();
  const double gamma = substitute(g, w, xi);
  EXPECT_NEAR(gamma, 0.17398251848796822, 1e-13);
  const auto r = mixability_holds(g, w, xi, gamma + 0.2);
  EXPECT_FALSE(r.holds);
  EXPECT_NEAR(r.slack[0], 0.04608030015844271 - 0.13986292413460349, 1e-12);
  EXPECT_GT(r.slack[1], 0.0);
}

TEST(Mixability, RandomDrawsAlwaysSatisfied) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> n_dist(1, 8);
  for (const auto& g : {GameSpec::log_loss(), GameSpec::square_loss()}) {
    for (int rep = 0; rep < 10000; ++rep) {
      const std::size_t n = n_dist(rng);
      const auto w = random_simplex(rng, n);
      std::vector<double> xi(n);
      for (auto& x : xi) x = u(rng) < 0.05 ? std::round(u(rng)) : u(rng);
      const auto r = mixability_holds(g, w, xi, substitute(g, w, xi));
      ASSERT_TRUE(r.holds) << "slack " << r.slack[0] << " " << r.slack[1];
    }
  }
}

TEST(Substitute, PermutationInvariant) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& g : {GameSpec::log_loss(), GameSpec::square_loss()}) {
    for (int rep = 0; rep < 500; ++rep) {
      const auto w = random_simplex(rng, 5);
      std::vector<double> xi(5);
      for (auto& x : xi) x = u(rng);
      std::vector<std::size_t> perm{0, 1, 2, 3, 4};
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<double> pw(5), pxi(5);
      for (std::size_t i = 0; i < 5; ++i) {
        pw[i] = w[perm[i]];
        pxi[i] = xi[perm[i]];
      }
      const double s = std::accumulate(pw.begin(), pw.end() - 1, 0.0);
      pw.back() = 1.0 - s;
      EXPECT_NEAR(substitute(g, w, xi), substitute(g, pw, pxi), 1e-12);
    }
  }
}

TEST(GeneralizedPrediction, MonotoneInExpertLoss) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& g : {GameSpec::log_loss(), GameSpec::square_loss()}) {
    for (int rep = 0; rep < 2000; ++rep) {
      const auto w = random_simplex(rng, 4);
      std::vector<double> xi(4);
      for (auto& x : xi) x = u(rng);
      const Outcome y = u(rng) < 0.5 ? 0 : 1;
      const double before = generalized_prediction(g, w, xi, y);
      // Move expert 2 away from the outcome: strictly larger loss.
      auto worse = xi;
      worse[2] = y == 1 ? xi[2] * u(rng) : xi[2] + (1.0 - xi[2]) * u(rng);
      if (loss(g, y, worse[2]) <= loss(g, y, xi[2])) continue;
      EXPECT_GE(generalized_prediction(g, w, worse, y), before - 1e-15);
    }
  }
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  const std::vector<double> x{-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_exp(x), -1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> empty;
  EXPECT_EQ(log_sum_exp(empty), -std::numeric_limits<double>::infinity());
}
