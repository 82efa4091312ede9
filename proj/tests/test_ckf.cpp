#include "pursuit/ckf.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pursuit;

namespace {

Mat4 FFt() {
  const Mat4 F = TransitionModel::constant_velocity(1.0).F;
  return F * F.transpose();
}

Mat4 rotation4(double phi) {
  Mat4 r = Mat4::Zero();
  const Eigen::Matrix2d r2 = Eigen::Rotation2Dd(phi).toRotationMatrix();
  r.topLeftCorner<2, 2>() = r2;
  r.bottomRightCorner<2, 2>() = r2;
  return r;
}

}  // namespace

TEST(ProcessNoise, BlockPattern) {
  const double d = 2.0;
  const auto q = ProcessNoise::white_acceleration(0.3, 0.7, d);
  EXPECT_DOUBLE_EQ(q.Q(0, 0), 0.3 * d * d * d / 3);
  EXPECT_DOUBLE_EQ(q.Q(0, 2), 0.3 * d * d / 2);
  EXPECT_DOUBLE_EQ(q.Q(2, 0), 0.3 * d * d / 2);
  EXPECT_DOUBLE_EQ(q.Q(2, 2), 0.3 * d);
  EXPECT_DOUBLE_EQ(q.Q(1, 1), 0.7 * d * d * d / 3);
  EXPECT_DOUBLE_EQ(q.Q(1, 3), 0.7 * d * d / 2);
  EXPECT_DOUBLE_EQ(q.Q(3, 3), 0.7 * d);
  EXPECT_DOUBLE_EQ(q.Q(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(q.Q(0, 3), 0.0);
  EXPECT_TRUE(is_symmetric(q.Q, 0.0));
  EXPECT_TRUE(is_psd(q.Q));
}

TEST(Transition, AppliesConstantVelocity) {
  const auto f = TransitionModel::constant_velocity(0.5);
  const Vec4 x(1, 2, 3, 4);
  const Vec4 y = f.F * x;
  EXPECT_EQ(y, Vec4(2.5, 4, 3, 4));
}

TEST(PredictStandard, Examples) {
  Belief b;
  b.mean << 0, 0, 1, 0;
  b.cov = Mat4::Identity();
  const auto p = predict_standard(b, TransitionModel::constant_velocity(1), ProcessNoise{});
  EXPECT_EQ(p.mean, Vec4(1, 0, 1, 0));
  EXPECT_EQ(p.cov, FFt());
  EXPECT_DOUBLE_EQ(p.cov(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(p.cov(0, 2), 1.0);
}

TEST(PredictStandard, StaysPsdWithoutProcessNoise) {
  std::mt19937_64 gen(17);
  for (int i = 0; i < 200; ++i) {
    Belief b{oracle::random_vec4(gen, 100), oracle::random_psd(gen, 50, i % 4 + 1)};
    const auto p = predict_standard(b, TransitionModel::constant_velocity(1), ProcessNoise{});
    EXPECT_TRUE(is_psd(p.cov));
    EXPECT_TRUE(is_symmetric(p.cov, 0.0));
  }
}

TEST(PredictWithHeading, RotatesVelocityKeepsSpeed) {
  Belief b;
  b.mean << 0, 0, 2, 0;
  const auto f = TransitionModel::constant_velocity(1);
  const auto p = predict_with_heading(b, kPi / 2, 1.0, f);
  EXPECT_NEAR(p.mean(0), 0.0, 1e-15);
  EXPECT_NEAR(p.mean(1), 2.0, 1e-15);
  EXPECT_NEAR(p.mean(2), 0.0, 1e-15);
  EXPECT_NEAR(p.mean(3), 2.0, 1e-15);
  EXPECT_EQ(p.cov, FFt());
}

TEST(PredictWithHeading, CurrentHeadingMatchesStandardPrediction) {
  Belief b;
  b.mean << 10, -4, 1.2, -0.7;
  b.cov = Mat4::Identity() * 3;
  const auto f = TransitionModel::constant_velocity(1);
  const auto a = predict_with_heading(b, std::atan2(-0.7, 1.2), 1.0, f);
  const auto s = predict_standard(b, f, ProcessNoise{});
  EXPECT_LT((a.mean - s.mean).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(a.cov, s.cov);
}

TEST(PredictWithHeading, CovarianceIndependentOfHeading) {
  Belief b;
  b.mean << 0, 0, 1, 1;
  const auto f = TransitionModel::constant_velocity(1);
  for (double h : {-3.0, -1.0, 0.0, 0.5, 2.0, kPi}) EXPECT_EQ(predict_with_heading(b, h, 1.0, f).cov, FFt());
}

TEST(PredictWithHeading, ZeroSpeedThrows) {
  Belief b;
  b.mean << 5, 5, 0, 0;
  EXPECT_THROW(predict_with_heading(b, 0.0, 1.0, TransitionModel::constant_velocity(1)), DegenerateHeading);
}

TEST(Cubature, IdentityAndScaledCovariance) {
  Belief b;
  const auto set = cubature_points(b);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(set.points[i], 2.0 * Vec4::Unit(i));
    EXPECT_EQ(set.points[i + 4], -2.0 * Vec4::Unit(i));
  }
  Belief c{Vec4::Ones(), 4 * Mat4::Identity()};
  const auto s2 = cubature_points(c);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(s2.points[i], Vec4::Ones() + 4.0 * Vec4::Unit(i));
    EXPECT_EQ(s2.points[i + 4], Vec4::Ones() - 4.0 * Vec4::Unit(i));
  }
}

TEST(Cubature, MomentReconstruction) {
  std::mt19937_64 gen(23);
  for (int i = 0; i < 1000; ++i) {
    const Belief b{oracle::random_vec4(gen, 1000), oracle::random_psd(gen, 100, i % 4 + 1)};
    const auto set = cubature_points(b);
    Vec4 m = Vec4::Zero();
    for (const auto& p : set.points) m += p;
    m /= 8;
    Mat4 c = Mat4::Zero();
    for (const auto& p : set.points) c += (p - m) * (p - m).transpose();
    c /= 8;
    const double scale = std::max(1.0, b.cov.cwiseAbs().maxCoeff());
    EXPECT_LT((m - b.mean).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, b.mean.cwiseAbs().maxCoeff()));
    EXPECT_LT((c - b.cov).cwiseAbs().maxCoeff(), 1e-8 * scale);
  }
}

TEST(Cubature, SingularCovarianceNeedsNoJitter) {
  Mat4 cov = Mat4::Zero();
  cov(2, 2) = 1;
  cov(3, 3) = 1;
  const Mat4 s = covariance_sqrt(cov);
  EXPECT_LT((s * s.transpose() - cov).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Cubature, NonPsdThrows) {
  Mat4 cov = Mat4::Identity();
  cov(0, 0) = -1;
  EXPECT_THROW(cubature_points(Belief{Vec4::Zero(), cov}), NonPsdCovariance);
  EXPECT_FALSE(is_psd(cov));
}

TEST(PredictedBearing, ZeroPositionCovariance) {
  Belief b;
  b.mean << 10, 10, 1, 0;
  b.cov = Mat4::Zero();
  b.cov(2, 2) = b.cov(3, 3) = 1;
  const auto pm = predicted_bearing(cubature_points(b), {0, 0});
  for (double beta : pm.samples) EXPECT_DOUBLE_EQ(beta, kPi / 4);
  EXPECT_DOUBLE_EQ(pm.z_hat, kPi / 4);
  const auto s = innovation_stats(cubature_points(b), pm, b, 0.02);
  EXPECT_DOUBLE_EQ(s.P_zz, 0.02 * 0.02);
  EXPECT_EQ(s.P_xz, Vec4::Zero());
}

TEST(PredictedBearing, SymmetricPointsGiveBearingToMean) {
  Belief b;
  b.mean << 0, 50, 0, 0;
  b.cov = Mat4::Identity() * 4;
  const auto pm = predicted_bearing(cubature_points(b), {0, 0});
  EXPECT_NEAR(pm.z_hat, kPi / 2, 1e-15);
}

TEST(PredictedBearing, StraddlingTheCutMatchesMonteCarloCircularMean) {
  const double r = 100;
  const double bearing = kPi - 0.01;
  Belief b;
  b.mean << r * std::cos(bearing), r * std::sin(bearing), 0, 0;
  b.cov = Mat4::Zero();
  b.cov(0, 0) = 9;
  b.cov(1, 1) = 25;
  b.cov(2, 2) = b.cov(3, 3) = 1;
  const Vec2 observer(0, 0);
  const auto pm = predicted_bearing(cubature_points(b), observer);
  bool straddles = false;
  for (double beta : pm.samples) straddles |= wrap_angle(beta) < 0;
  ASSERT_TRUE(straddles);
  const double mc = oracle::monte_carlo_circular_mean(b, observer, 1000000, 31);
  EXPECT_GT(pm.z_hat, 3.0);
  EXPECT_LT(std::abs(wrap_angle(pm.z_hat - mc)), 1e-2);
}

TEST(InnovationStats, RotatedPointsShiftPredictionKeepVariance) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    Belief b{oracle::random_vec4(gen, 200), oracle::random_psd(gen, 20, 4)};
    b.mean.head<2>() += Vec2(300, 0);
    const Vec2 observer = Vec2(oracle::random_vec4(gen, 50).head<2>());
    const double phi = ang(gen);
    const Mat4 r = rotation4(phi);
    const Belief rb{r * b.mean, r * b.cov * r.transpose()};
    const Vec2 robs = r.topLeftCorner<2, 2>() * observer;

    const auto set = cubature_points(b);
    const auto pm = predicted_bearing(set, observer);
    const auto s = innovation_stats(set, pm, b, 0.02);
    // Rotate the points themselves: the Cholesky factor of r P r' is not r S.
    CubatureSet rset = set;
    for (Vec4& p : rset.points) p = r * p;
    const auto rpm = predicted_bearing(rset, robs);
    const auto rs = innovation_stats(rset, rpm, rb, 0.02);
    EXPECT_LT(std::abs(wrap_angle(rpm.z_hat - pm.z_hat - phi)), 1e-9);
    EXPECT_NEAR(rs.P_zz, s.P_zz, 1e-9);
    EXPECT_LT((rs.P_xz - r * s.P_xz).norm(), 1e-9);
    EXPECT_GE(s.P_zz, 0.02 * 0.02);
  }
}

TEST(Update, ZeroGainLeavesBeliefUnchanged) {
  Belief b{Vec4(1, 2, 3, 4), Mat4::Identity()};
  const InnovationStats s{0.5, Vec4::Zero()};
  const auto u = update(b, 0.3, 0.1, s);
  EXPECT_EQ(u.mean, b.mean);
  EXPECT_EQ(u.cov, b.cov);
}

TEST(Update, ZeroInnovationStillShrinks) {
  Belief b{Vec4(1, 2, 3, 4), Mat4::Identity()};
  const InnovationStats s{2.0, Vec4(1, 0, 0, 0)};
  const auto u = update(b, 0.7, 0.7, s);
  EXPECT_EQ(u.mean, b.mean);
  EXPECT_DOUBLE_EQ(u.cov(0, 0), 1.0 - 0.5);
  EXPECT_LT(u.cov.trace(), b.cov.trace());
}

TEST(Update, InnovationIsWrapped) {
  Belief b{Vec4::Zero(), Mat4::Identity()};
  const InnovationStats s{1.0, Vec4(1, 0, 0, 0)};
  const auto u = update(b, -kPi + 0.1, kPi - 0.1, s);
  EXPECT_NEAR(u.mean(0), 0.2, 1e-12);
}

TEST(Update, NonPositiveInnovationVarianceThrows) {
  Belief b;
  EXPECT_THROW(update(b, 0, 0, InnovationStats{0.0, Vec4::Zero()}), NumericalFailure);
  EXPECT_THROW(update(b, 0, 0, InnovationStats{-1.0, Vec4::Zero()}), NumericalFailure);
}

// Closed-form Kalman filter versus one predict + cubature update with a
// linear measurement functional.
TEST(LinearOracle, OneCycleMatchesKalmanFilter) {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> h(-2, 2), sig(0.05, 3), q(0, 0.5), dt(0.2, 2);
  for (int i = 0; i < 1000; ++i) {
    const Belief b{oracle::random_vec4(gen, 10), oracle::random_psd(gen, 2, i % 4 + 1)};
    const double delta = dt(gen);
    const auto f = TransitionModel::constant_velocity(delta);
    const auto pn = ProcessNoise::white_acceleration(q(gen), q(gen), delta);
    const LinearModel model{Eigen::RowVector4d(h(gen), h(gen), h(gen), h(gen))};
    const double sigma = sig(gen);
    const double z = h(gen) * 5;

    const Belief pred = predict_standard(b, f, pn);
    const Belief got = measurement_update(pred, model, z, sigma);
    const Belief want = oracle::kalman_cycle(b, f.F, pn.Q, model.H, z, sigma);

    EXPECT_LT((got.mean - want.mean).cwiseAbs().maxCoeff(), 1e-10) << "case " << i;
    EXPECT_LT((got.cov - want.cov).cwiseAbs().maxCoeff(), 1e-10) << "case " << i;

    const auto set = cubature_points(pred);
    const auto pm = model.predict(set);
    const auto s = innovation_stats<LinearModel>(set, pm, pred, sigma);
    EXPECT_NEAR(s.P_zz, (model.H * pred.cov * model.H.transpose())(0, 0) + sigma * sigma, 1e-10);
    EXPECT_LT((s.P_xz - pred.cov * model.H.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(UpdateInvariants, BearingUpdatesStaySymmetricPsdAndShrink) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> z(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    Belief b{oracle::random_vec4(gen, 100), oracle::random_psd(gen, 30, i % 4 + 1)};
    b.mean.head<2>() += Vec2(500, 500);
    const auto pred = predict_standard(b, TransitionModel::constant_velocity(1),
                                       ProcessNoise::white_acceleration(1e-3, 1e-3, 1));
    const auto u = measurement_update(pred, BearingModel{Vec2(0, 0)}, z(gen), 0.02);
    EXPECT_TRUE(is_symmetric(u.cov));
    EXPECT_TRUE(is_psd(u.cov));
    EXPECT_LE(u.cov.trace(), pred.cov.trace() + 1e-9);
  }
}
