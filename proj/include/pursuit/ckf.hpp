#ifndef PURSUIT_CKF_HPP
#define PURSUIT_CKF_HPP

// Cubature Kalman filter for a 4-state constant-velocity target observed
// through a scalar (bearing) measurement.

#include "pursuit/core.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace pursuit {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

class NonPsdCovariance : public std::runtime_error {
 public:
  explicit NonPsdCovariance(const std::string& what) : std::runtime_error(what) {}
};

class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by the heading-informed prediction when the estimated speed is zero.
class DegenerateHeading : public std::runtime_error {
 public:
  explicit DegenerateHeading(const std::string& what) : std::runtime_error(what) {}
};

/// Gaussian estimate of one player's state [x, y, vx, vy].
struct Belief {
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Identity();

  Vec2 position() const { return mean.head<2>(); }
  Vec2 velocity() const { return mean.tail<2>(); }
  double position_trace() const { return cov(0, 0) + cov(1, 1); }
};

inline Mat4 symmetrized(const Mat4& m) { return 0.5 * (m + m.transpose()); }

/// Constant-velocity transition [I, dI; 0, I].
struct TransitionModel {
  Mat4 F = Mat4::Identity();

  static TransitionModel constant_velocity(double delta) {
    TransitionModel m;
    m.F(0, 2) = delta;
    m.F(1, 3) = delta;
    return m;
  }
};

/// White-acceleration process noise with per-axis spectral densities.
struct ProcessNoise {
  double q_x = 0.0;
  double q_y = 0.0;
  Mat4 Q = Mat4::Zero();

  static ProcessNoise white_acceleration(double q_x, double q_y, double delta) {
    ProcessNoise p{q_x, q_y, Mat4::Zero()};
    const double d3 = delta * delta * delta / 3.0;
    const double d2 = delta * delta / 2.0;
    const std::array<double, 2> q{q_x, q_y};
    for (int axis = 0; axis < 2; ++axis) {
      p.Q(axis, axis) = d3 * q[axis];
      p.Q(axis, axis + 2) = d2 * q[axis];
      p.Q(axis + 2, axis) = d2 * q[axis];
      p.Q(axis + 2, axis + 2) = delta * q[axis];
    }
    return p;
  }
};

// ---------------------------------------------------------------------------
// Matrix square root
// ---------------------------------------------------------------------------

namespace detail {

/// Cholesky that tolerates exactly singular PSD input: a zero pivot yields a
/// zero column as long as the remaining column is zero as well.
inline std::optional<Mat4> semidefinite_cholesky(const Mat4& a) {
  Mat4 l = Mat4::Zero();
  const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 1e-14 * scale;
  for (int j = 0; j < 4; ++j) {
    double d = a(j, j);
    for (int p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
    if (d < -tol || !std::isfinite(d)) return std::nullopt;
    if (d <= tol) {
      for (int i = j + 1; i < 4; ++i) {
        double s = a(i, j);
        for (int p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
        if (std::abs(s) > std::sqrt(tol * scale)) return std::nullopt;
      }
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < 4; ++i) {
      double s = a(i, j);
      for (int p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

}  // namespace detail

/// Lower-triangular S with S*S^T = cov. On failure the diagonal is jittered by
/// eps*trace/4 for eps in {1e-12, 1e-10, 1e-8, 1e-6} before giving up.
inline Mat4 covariance_sqrt(const Mat4& cov) {
  if (auto l = detail::semidefinite_cholesky(cov)) return *l;
  const double base = std::max(cov.trace() / 4.0, 0.0);
  for (double eps : {1e-12, 1e-10, 1e-8, 1e-6}) {
    const Mat4 jittered = cov + eps * base * Mat4::Identity();
    if (auto l = detail::semidefinite_cholesky(jittered)) return *l;
  }
  throw NonPsdCovariance("covariance is not positive semidefinite");
}

inline bool is_psd(const Mat4& cov) {
  try {
    (void)covariance_sqrt(cov);
    return true;
  } catch (const NonPsdCovariance&) {
    return false;
  }
}

inline bool is_symmetric(const Mat4& cov, double tol = 1e-10) {
  return (cov - cov.transpose()).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

inline Belief predict_standard(const Belief& b, const TransitionModel& model, const ProcessNoise& noise) {
  return {model.F * b.mean, symmetrized(model.F * b.cov * model.F.transpose() + noise.Q)};
}

/// Moves the estimate along a supplied heading at the estimated speed. The
/// covariance is propagated through F without process noise.
inline Belief predict_with_heading(const Belief& b, double heading, double delta, const TransitionModel& model) {
  const double speed = b.velocity().norm();
  if (!(speed > 0.0)) throw DegenerateHeading("estimated speed is zero");
  const Vec2 dir = unit(heading);
  Belief out;
  out.mean.head<2>() = b.position() + speed * delta * dir;
  out.mean.tail<2>() = speed * dir;
  out.cov = symmetrized(model.F * b.cov * model.F.transpose());
  return out;
}

// ---------------------------------------------------------------------------
// Cubature transform and update
// ---------------------------------------------------------------------------

/// Degree-3 spherical-radial points mean +/- 2*S*e_i, uniformly weighted 1/8.
struct CubatureSet {
  static constexpr int kCount = 8;
  std::array<Vec4, kCount> points;
};

inline CubatureSet cubature_points(const Belief& b) {
  const Mat4 s = covariance_sqrt(b.cov);
  CubatureSet set;
  for (int i = 0; i < 4; ++i) {
    set.points[i] = b.mean + 2.0 * s.col(i);
    set.points[i + 4] = b.mean - 2.0 * s.col(i);
  }
  return set;
}

/// Propagated measurement samples and their mean.
struct PredictedMeasurement {
  double z_hat = 0.0;
  std::array<double, CubatureSet::kCount> samples{};
};

/// Bearing from a fixed observer. Samples are re-wrapped around the first one
/// so that the arithmetic mean is taken on a branch-cut-free interval.
struct BearingModel {
  Vec2 observer;

  PredictedMeasurement predict(const CubatureSet& set) const {
    PredictedMeasurement out;
    double sum = 0.0;
    double ref = 0.0;
    for (int i = 0; i < CubatureSet::kCount; ++i) {
      const double beta = true_bearing(observer, set.points[i].head<2>());
      out.samples[i] = i == 0 ? beta : ref + wrap_angle(beta - ref);
      if (i == 0) ref = beta;
      sum += out.samples[i];
    }
    out.z_hat = wrap_angle(sum / CubatureSet::kCount);
    return out;
  }

  static double residual(double a, double b) { return wrap_angle(a - b); }
};

/// Linear scalar functional h(x) = H x.
struct LinearModel {
  Eigen::RowVector4d H;

  PredictedMeasurement predict(const CubatureSet& set) const {
    PredictedMeasurement out;
    double sum = 0.0;
    for (int i = 0; i < CubatureSet::kCount; ++i) {
      out.samples[i] = H * set.points[i];
      sum += out.samples[i];
    }
    out.z_hat = sum / CubatureSet::kCount;
    return out;
  }

  static double residual(double a, double b) { return a - b; }
};

inline PredictedMeasurement predicted_bearing(const CubatureSet& set, const Vec2& observer) {
  return BearingModel{observer}.predict(set);
}

struct InnovationStats {
  double P_zz = 0.0;
  Vec4 P_xz = Vec4::Zero();
};

template <class Model>
InnovationStats innovation_stats(const CubatureSet& set, const PredictedMeasurement& pm, const Belief& b_pred,
                                 double sigma) {
  InnovationStats s;
  for (int i = 0; i < CubatureSet::kCount; ++i) {
    const double dz = Model::residual(pm.samples[i], pm.z_hat);
    s.P_zz += dz * dz;
    s.P_xz += (set.points[i] - b_pred.mean) * dz;
  }
  s.P_zz = s.P_zz / CubatureSet::kCount + sigma * sigma;
  s.P_xz /= CubatureSet::kCount;
  return s;
}

inline InnovationStats innovation_stats(const CubatureSet& set, const PredictedMeasurement& pm, const Belief& b_pred,
                                        double sigma) {
  return innovation_stats<BearingModel>(set, pm, b_pred, sigma);
}

/// Kalman update from an already-formed innovation.
inline Belief update_with_innovation(const Belief& b_pred, double innovation, const InnovationStats& s) {
  if (!(s.P_zz > 0.0)) throw NumericalFailure("innovation variance is not positive");
  const Vec4 gain = s.P_xz / s.P_zz;
  return {b_pred.mean + gain * innovation, symmetrized(b_pred.cov - gain * s.P_zz * gain.transpose())};
}

/// Bearing update; the innovation is wrapped into (-pi, pi].
inline Belief update(const Belief& b_pred, double z_meas, double z_hat, const InnovationStats& s) {
  return update_with_innovation(b_pred, wrap_angle(z_meas - z_hat), s);
}

/// Predicted belief -> updated belief for one scalar measurement.
template <class Model>
Belief measurement_update(const Belief& b_pred, const Model& model, double z_meas, double sigma) {
  const CubatureSet set = cubature_points(b_pred);
  const PredictedMeasurement pm = model.predict(set);
  const InnovationStats s = innovation_stats<Model>(set, pm, b_pred, sigma);
  return update_with_innovation(b_pred, Model::residual(z_meas, pm.z_hat), s);
}

}  // namespace pursuit

#endif  // PURSUIT_CKF_HPP
