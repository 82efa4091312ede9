#include "pursuit/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pursuit;

TEST(Advance, AxisAlignedSteps) {
  const auto s = advance(KinematicState::from_heading({0, 0}, 3, 0), 0.0, 1.0);
  EXPECT_NEAR(s.pos.x(), 3.0, 1e-15);
  EXPECT_NEAR(s.pos.y(), 0.0, 1e-15);

  const auto t = advance(KinematicState::from_heading({1000, 1000}, 1, 0), kPi / 2, 1.0);
  EXPECT_NEAR(t.pos.x(), 1000.0, 1e-12);
  EXPECT_NEAR(t.pos.y(), 1001.0, 1e-12);
}

TEST(Advance, DiagonalStep) {
  const auto s = advance(KinematicState::from_heading({400, 550}, 2, 0), kPi / 4, 1.0);
  EXPECT_NEAR(s.pos.x(), 400 + std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.pos.y(), 550 + std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.speed(), 2.0, 1e-12);
  EXPECT_NEAR(s.heading(), kPi / 4, 1e-12);
}

TEST(Advance, DisplacementEqualsSpeedTimesDelta) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> pos(-1e4, 1e4), ang(-kPi, kPi), sp(0.1, 5), dt(0.1, 3);
  for (int i = 0; i < 1000; ++i) {
    const auto s = KinematicState::from_heading({pos(gen), pos(gen)}, sp(gen), ang(gen));
    const double d = dt(gen);
    const auto n = advance(s, ang(gen), d);
    const double want = s.speed() * d;
    EXPECT_NEAR((n.pos - s.pos).norm(), want, 1e-12 * std::max(1.0, want) + 1e-11);
    EXPECT_NEAR(n.speed(), s.speed(), 1e-12 * s.speed());
  }
}

TEST(TrueBearing, Quadrants) {
  EXPECT_DOUBLE_EQ(true_bearing({0, 0}, {1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(true_bearing({0, 0}, {0, 5}), kPi / 2);
  EXPECT_DOUBLE_EQ(true_bearing({0, 0}, {-1, -1}), -3 * kPi / 4);
  EXPECT_DOUBLE_EQ(true_bearing({0, 0}, {-1, 0}), kPi);
}

TEST(TrueBearing, CoincidentPointsThrow) {
  EXPECT_THROW(true_bearing({3, 4}, {3, 4}), DegenerateGeometry);
}

TEST(TrueBearing, ReverseDiffersByPi) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pos(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p(pos(gen), pos(gen)), q(pos(gen), pos(gen));
    const double diff = wrap_angle(true_bearing(p, q) - wrap_angle(true_bearing(q, p) + kPi));
    EXPECT_NEAR(diff, 0.0, 1e-12);
  }
}

TEST(WrapAngle, Examples) {
  EXPECT_DOUBLE_EQ(wrap_angle(3 * kPi), kPi);
  EXPECT_NEAR(wrap_angle(-3 * kPi / 2), kPi / 2, 1e-15);
  EXPECT_DOUBLE_EQ(wrap_angle(0.1), 0.1);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
}

TEST(WrapAngle, RangeIdempotencePeriodicity) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> a(-100, 100);
  for (int i = 0; i < 10000; ++i) {
    const double x = a(gen);
    const double w = wrap_angle(x);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_EQ(wrap_angle(w), w);
    EXPECT_NEAR(wrap_angle(wrap_angle(x + kTwoPi) - w), 0.0, 1e-12);
    EXPECT_NEAR(std::remainder(x - w, kTwoPi), 0.0, 1e-12);
  }
}

TEST(Noise, UniformAndNormalRanges) {
  const NoiseStream n(99);
  double sum = 0, sq = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const NoiseKey key{static_cast<std::uint64_t>(i), Channel::TrackerMeasuresEvader, 0};
    const double u = n.uniform(key);
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    const double z = n.normal(key);
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / count, 0.0, 5.0 / std::sqrt(count));
  EXPECT_NEAR(sq / count, 1.0, 0.02);
}

TEST(Noise, ChannelsAndIndicesAreIndependentDraws) {
  const NoiseStream n(5);
  const NoiseKey a{10, Channel::TrackerMeasuresEvader, 0};
  const NoiseKey b{10, Channel::EvaderMeasuresTracker, 0};
  const NoiseKey c{10, Channel::TrackerMeasuresEvader, 1};
  const NoiseKey d{11, Channel::TrackerMeasuresEvader, 0};
  EXPECT_NE(n.bits(a), n.bits(b));
  EXPECT_NE(n.bits(a), n.bits(c));
  EXPECT_NE(n.bits(a), n.bits(d));
  EXPECT_NE(n.bits(a, 0), n.bits(a, 1));
  EXPECT_NE(NoiseStream(6).bits(a), n.bits(a));
}

TEST(MeasureBearing, GoldenSeededDraw) {
  const NoiseStream n(42);
  const NoiseKey key{0, Channel::TrackerMeasuresEvader, 0};
  const double z = measure_bearing({0, 0}, {1, 0}, 0.02, n, key);
  EXPECT_LE(std::abs(z), 5 * 0.02);
  EXPECT_DOUBLE_EQ(z, 0.0089150631166019321);
  EXPECT_EQ(z, measure_bearing({0, 0}, {1, 0}, 0.02, NoiseStream(42), key));
}

TEST(MeasureBearing, ZeroSigmaLimit) {
  const NoiseStream n(1);
  EXPECT_DOUBLE_EQ(measure_bearing({0, 0}, {-1, -1}, 1e-300, n, {}), -3 * kPi / 4);
}

TEST(MeasureBearing, SampleMeanConvergesToTruth) {
  const NoiseStream n(2024);
  const double sigma = 0.02;
  const Vec2 obs(0, 0), tgt(3, 4);
  const int count = 100000;
  double sum = 0;
  for (int i = 0; i < count; ++i) {
    sum += measure_bearing(obs, tgt, sigma, n, {static_cast<std::uint64_t>(i), Channel::TrackerMeasuresEvader, 0});
  }
  EXPECT_NEAR(sum / count - true_bearing(obs, tgt), 0.0, 3 * sigma / std::sqrt(count));
}

TEST(MeasureBearing, WrapsAcrossTheCut) {
  const NoiseStream n(8);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double z = measure_bearing({0, 0}, {-1, 1e-9}, 0.05, n, {k, Channel::EvaderMeasuresTracker, 0});
    EXPECT_GT(z, -kPi);
    EXPECT_LE(z, kPi);
    EXPECT_LT(std::abs(wrap_angle(z - kPi)), 0.3);
  }
}
