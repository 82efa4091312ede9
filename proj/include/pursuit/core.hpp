#ifndef PURSUIT_CORE_HPP
#define PURSUIT_CORE_HPP

// Kinematics, bearing geometry and counter-based noise shared by every
// other header in the library.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pursuit {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when two points coincide and a bearing is undefined.
class DegenerateGeometry : public std::runtime_error {
 public:
  explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};

/// Maps any finite angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

inline Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// True position and velocity of one player. Speed is constant for a run.
struct KinematicState {
  Vec2 pos = Vec2::Zero();
  Vec2 vel = Vec2::Zero();

  static KinematicState from_heading(const Vec2& pos, double speed, double heading) {
    return {pos, speed * unit(heading)};
  }

  double speed() const { return vel.norm(); }
  double heading() const { return std::atan2(vel.y(), vel.x()); }
};

/// Straight-line motion over one sampling interval at the commanded heading.
inline KinematicState advance(const KinematicState& state, double heading, double delta) {
  const double speed = state.speed();
  const Vec2 dir = unit(heading);
  return {state.pos + delta * speed * dir, speed * dir};
}

/// Four-quadrant bearing from observer to target, atan2(dy, dx).
inline double true_bearing(const Vec2& observer, const Vec2& target) {
  const Vec2 d = target - observer;
  if (d.x() == 0.0 && d.y() == 0.0) {
    throw DegenerateGeometry("bearing undefined: observer and target coincide");
  }
  return wrap_angle(std::atan2(d.y(), d.x()));
}

struct TimeGrid {
  double delta = 1.0;
  int k_max = 400;
};

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

/// Independent random channels. Values are part of the seed derivation and
/// must never be renumbered.
enum class Channel : std::uint32_t {
  TrackerMeasuresEvader = 1,
  EvaderMeasuresTracker = 2,
  SyntheticMeasurement = 3,
  InitialPosition = 4,
  InitialHeading = 5,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of 64-bit words into one well-mixed word.
inline constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v + 0x632BE59BD9B4E019ULL));
}

struct NoiseKey {
  std::uint64_t k = 0;
  Channel channel = Channel::TrackerMeasuresEvader;
  std::uint32_t index = 0;
};

/// Counter-based random source: every draw is a pure function of
/// (seed, step, channel, index), so strategies that consume different
/// numbers of draws never shift each other's noise.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(const NoiseKey& key, std::uint32_t lane = 0) const {
    std::uint64_t h = splitmix64(seed_);
    h = hash_combine(h, key.k);
    h = hash_combine(h, static_cast<std::uint64_t>(key.channel));
    h = hash_combine(h, key.index);
    return hash_combine(h, lane);
  }

  /// Uniform in (0, 1].
  double uniform(const NoiseKey& key, std::uint32_t lane = 0) const {
    return (static_cast<double>(bits(key, lane) >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(const NoiseKey& key, double lo, double hi, std::uint32_t lane = 0) const {
    return lo + (hi - lo) * (uniform(key, lane) - 0x1.0p-53);
  }

  /// Standard normal draw via Box-Muller on two uniform lanes.
  double normal(const NoiseKey& key) const {
    const double u1 = uniform(key, 0);
    const double u2 = uniform(key, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t seed_;
};

struct NoiseModel {
  double sigma_bearing_on_evader = 0.02;  // tracker's sensor
  double sigma_bearing_on_tracker = 0.02; // evader's sensor
  std::uint64_t rng_seed = 0;
};

/// Noisy bearing: true bearing plus N(0, sigma^2), wrapped.
inline double measure_bearing(const Vec2& observer, const Vec2& target, double sigma,
                              const NoiseStream& noise, const NoiseKey& key) {
  return wrap_angle(true_bearing(observer, target) + sigma * noise.normal(key));
}

}  // namespace pursuit

#endif  // PURSUIT_CORE_HPP
