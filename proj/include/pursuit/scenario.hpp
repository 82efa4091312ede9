#ifndef PURSUIT_SCENARIO_HPP
#define PURSUIT_SCENARIO_HPP

#include "pursuit/core.hpp"
#include "pursuit/strategies.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pursuit {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Minimum (tracker win) and maximum (evader win) bound for one metric.
struct Bounds {
  double min = 0.0;
  double max = 0.0;
};

/// Defaults are calibrated values; the mechanism does not fix them.
struct Thresholds {
  Bounds cov_trace{25.0, 4.0e6};
  Bounds est_error{20.0, 2000.0};
  Bounds true_distance{20.0, 3000.0};
};

/// Axis-aligned square initialization region.
struct Box {
  Vec2 center = Vec2::Zero();
  double half_width = 20.0;
};

enum class LinearHeadingRule { AwayFromTracker, Random };

struct SpeedPair {
  double tracker = 1.0;
  double evader = 1.0;
};

/// The cross product executed by a sweep.
struct SweepPlan {
  std::vector<SpeedPair> speed_pairs{{3, 1}, {3, 2}, {1, 1}, {2, 3}, {1, 3}};
  std::vector<TrackerAction> tracker_actions{TrackerAction::CovarianceMin, TrackerAction::GameTheoretic};
  std::vector<EvaderAction> evader_actions{EvaderAction::LinearEscape, EvaderAction::GameTheoretic};
};

struct ScenarioConfig {
  double tracker_speed = 3.0;
  double evader_speed = 1.0;
  TrackerAction tracker_action = TrackerAction::CovarianceMin;
  EvaderAction evader_action = EvaderAction::LinearEscape;
  int n_runs = 200;
  int k_max = 400;
  double delta = 1.0;

  double sigma_bearing_on_evader = 0.02;
  double sigma_bearing_on_tracker = 0.02;
  double q_x = 1e-3;
  double q_y = 1e-3;

  Thresholds thresholds;
  int tracker_grid_n = 24;
  int evader_grid_n = 24;

  Box tracker_box{{400.0, 550.0}, 20.0};
  Box evader_box{{1000.0, 1000.0}, 20.0};

  // Prior the tracker (and tracker*) uses for the evader: moving away.
  BeliefPrior evader_prior{1000.0, 300.0, 2.0, 1.0, 0.0};
  // Prior the evader uses for the tracker: approaching.
  BeliefPrior tracker_prior{1000.0, 300.0, 2.0, 1.0, kPi};

  LinearHeadingRule linear_heading = LinearHeadingRule::AwayFromTracker;

  // Test hook: start both filters at the true states with this standard
  // deviation on every component instead of the bearing-based prior.
  bool exact_initial_beliefs = false;
  double exact_initial_std = 1e-3;

  std::uint64_t master_seed = 20240917;
  SweepPlan sweep;
};

/// Tracker and evader starting positions, uniform in their boxes.
inline std::pair<Vec2, Vec2> init_positions(const NoiseStream& rng, const Box& tracker_box, const Box& evader_box) {
  auto draw = [&](const Box& box, std::uint32_t index) {
    const NoiseKey key{0, Channel::InitialPosition, index};
    const double hw = box.half_width;
    return Vec2(rng.uniform(key, box.center.x() - hw, box.center.x() + hw, 0),
                rng.uniform(key, box.center.y() - hw, box.center.y() + hw, 1));
  };
  return {draw(tracker_box, 0), draw(evader_box, 1)};
}

inline std::vector<std::string> validation_errors(const ScenarioConfig& c) {
  std::vector<std::string> errs;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) errs.push_back(std::string(name) + " must be positive");
  };
  auto nonneg = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) errs.push_back(std::string(name) + " must be non-negative");
  };
  positive(c.tracker_speed, "tracker_speed");
  positive(c.evader_speed, "evader_speed");
  if (c.n_runs < 1) errs.emplace_back("n_runs must be >= 1");
  if (c.k_max < 1) errs.emplace_back("k_max must be >= 1");
  positive(c.delta, "delta");
  positive(c.sigma_bearing_on_evader, "sigma_bearing_on_evader");
  positive(c.sigma_bearing_on_tracker, "sigma_bearing_on_tracker");
  nonneg(c.q_x, "q_x");
  nonneg(c.q_y, "q_y");
  auto bounds = [&](const Bounds& b, const char* name) {
    positive(b.min, name);
    positive(b.max, name);
    if (!(b.min < b.max)) errs.push_back(std::string(name) + ": min must be < max");
  };
  bounds(c.thresholds.cov_trace, "thresholds.cov_trace");
  bounds(c.thresholds.est_error, "thresholds.est_error");
  bounds(c.thresholds.true_distance, "thresholds.true_distance");
  if (c.tracker_grid_n < 2) errs.emplace_back("tracker_grid_n must be >= 2");
  if (c.evader_grid_n < 2) errs.emplace_back("evader_grid_n must be >= 2");
  nonneg(c.tracker_box.half_width, "tracker_box.half_width");
  nonneg(c.evader_box.half_width, "evader_box.half_width");
  const Vec2 gap = (c.tracker_box.center - c.evader_box.center).cwiseAbs();
  const double reach = c.tracker_box.half_width + c.evader_box.half_width;
  if (gap.x() <= reach && gap.y() <= reach) errs.emplace_back("initialization boxes overlap");
  for (const auto* p : {&c.evader_prior, &c.tracker_prior}) {
    positive(p->range_mean, "prior.range_mean");
    positive(p->range_std, "prior.range_std");
    positive(p->speed_mean, "prior.speed_mean");
    positive(p->speed_std, "prior.speed_std");
  }
  positive(c.exact_initial_std, "exact_initial_std");
  if (c.sweep.speed_pairs.empty()) errs.emplace_back("sweep.speed_pairs must not be empty");
  for (const auto& sp : c.sweep.speed_pairs) {
    positive(sp.tracker, "sweep.speed_pairs.tracker");
    positive(sp.evader, "sweep.speed_pairs.evader");
  }
  if (c.sweep.tracker_actions.empty()) errs.emplace_back("sweep.tracker_actions must not be empty");
  if (c.sweep.evader_actions.empty()) errs.emplace_back("sweep.evader_actions must not be empty");
  return errs;
}

inline void validate(const ScenarioConfig& c) {
  const auto errs = validation_errors(c);
  if (errs.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errs) msg += "\n  " + e;
  throw ConfigError(msg);
}

}  // namespace pursuit

#endif  // PURSUIT_SCENARIO_HPP
