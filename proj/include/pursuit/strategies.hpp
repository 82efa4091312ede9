#ifndef PURSUIT_STRATEGIES_HPP
#define PURSUIT_STRATEGIES_HPP

// Decision procedures of the two players and the internal opponent models
// they use. No function here receives the opponent's true state; the
// synthetic measurement in evader_game reads the evader's own position.

#include "pursuit/ckf.hpp"
#include "pursuit/core.hpp"
#include "pursuit/game.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pursuit {

enum class TrackerAction { CovarianceMin, GameTheoretic };
enum class EvaderAction { LinearEscape, GameTheoretic };

inline std::string_view to_string(TrackerAction a) {
  return a == TrackerAction::CovarianceMin ? "covariance_min" : "game_theoretic";
}

inline std::string_view to_string(EvaderAction a) {
  return a == EvaderAction::LinearEscape ? "linear_escape" : "game_theoretic";
}

inline TrackerAction parse_tracker_action(std::string_view s) {
  if (s == "covariance_min") return TrackerAction::CovarianceMin;
  if (s == "game_theoretic") return TrackerAction::GameTheoretic;
  throw std::invalid_argument("unknown tracker action: " + std::string(s));
}

inline EvaderAction parse_evader_action(std::string_view s) {
  if (s == "linear_escape") return EvaderAction::LinearEscape;
  if (s == "game_theoretic") return EvaderAction::GameTheoretic;
  throw std::invalid_argument("unknown evader action: " + std::string(s));
}

/// Everything one CKF needs besides its belief.
struct FilterSettings {
  double delta = 1.0;
  double sigma = 0.02;
  TransitionModel transition = TransitionModel::constant_velocity(1.0);
  ProcessNoise process;

  GameModel game_model() const { return {delta, sigma, transition}; }
};

/// Prior used to turn a single bearing into a full Gaussian belief: the
/// target is placed at `range_mean` along the bearing, moving at
/// `speed_mean` along the bearing rotated by `heading_offset`.
struct BeliefPrior {
  double range_mean = 1000.0;
  double range_std = 300.0;
  double speed_mean = 2.0;
  double speed_std = 1.0;
  double heading_offset = 0.0;
};

inline Belief init_belief(const Vec2& observer, double bearing, double sigma, const BeliefPrior& prior) {
  const Vec2 u = unit(bearing);
  const Vec2 n(-u.y(), u.x());
  Belief b;
  b.mean.head<2>() = observer + prior.range_mean * u;
  b.mean.tail<2>() = prior.speed_mean * unit(bearing + prior.heading_offset);
  const double cross = prior.range_mean * sigma;
  b.cov.setZero();
  b.cov.topLeftCorner<2, 2>() =
      prior.range_std * prior.range_std * u * u.transpose() + cross * cross * n * n.transpose();
  b.cov.bottomRightCorner<2, 2>() = prior.speed_std * prior.speed_std * Eigen::Matrix2d::Identity();
  b.cov = symmetrized(b.cov);
  return b;
}

struct HeadingDecision {
  double heading = 0.0;
  bool fallback = false;
};

/// One-step covariance minimization over the tracker's heading grid.
inline HeadingDecision tracker_covmin(const Belief& b, const KinematicState& tracker, const ActionSet& headings,
                                      const FilterSettings& f) {
  const Hypothesis hyp(predict_standard(b, f.transition, f.process));
  std::optional<std::size_t> best;
  double best_value = 0.0;
  const double prior = hyp.prediction().position_trace();
  bool informative = false;
  for (std::size_t l = 0; l < headings.size(); ++l) {
    const Vec2 observer = advance(tracker, headings[l], f.delta).pos;
    const double value = hyp.updated_position_trace(observer, f.sigma);
    if (value < prior) informative = true;
    if (!best || value < best_value) {
      best = l;
      best_value = value;
    }
  }
  if (!informative && prior > 0.0) return {tracker.heading(), true};
  return {headings[*best], false};
}

struct GameDecision {
  double own_heading = 0.0;       // heading the deciding player executes
  double opponent_heading = 0.0;  // security heading of the internal opponent model
  bool fallback = false;
};

/// Minimax heading against the internal evader model. The evader model's
/// maximin heading is returned for the next heading-informed prediction.
inline GameDecision tracker_game(const Belief& b, const KinematicState& tracker, const ActionSet& tracker_headings,
                                 const ActionSet& evader_headings, const FilterSettings& f) {
  PayoffMatrix u;
  try {
    u = build_payoff(tracker, b, tracker_headings, evader_headings, f.game_model());
  } catch (const DegenerateHeading&) {
    const HeadingDecision d = tracker_covmin(b, tracker, tracker_headings, f);
    return {d.heading, d.heading, true};
  }
  const SecurityChoice row = minimax_row(u);
  const SecurityChoice col = maximin_col(u);
  return {tracker_headings[static_cast<std::size_t>(row.index)], evader_headings[static_cast<std::size_t>(col.index)],
          false};
}

/// Linear escape: the heading fixed at k = 0 is held for the whole run.
struct LinearEscape {
  double heading = 0.0;
};

inline double evader_linear(const LinearEscape& plan) { return plan.heading; }

/// State the evader keeps about its simulated tracker (tracker*).
struct InternalModelState {
  bool initialized = false;
  Belief simulated_belief;                 // tracker*'s belief about the evader
  std::optional<double> last_game_heading;  // previous maximin heading
};

struct EvaderGameSettings {
  FilterSettings tracker_star_filter;  // sigma is the tracker's sensor noise
  BeliefPrior evader_prior;            // prior tracker* uses at initialization
};

struct EvaderGameOutcome {
  GameDecision decision;
  std::optional<double> synthetic_bearing;
  bool update_skipped = false;
  double predicted_trace = 0.0;
};

/// Advances tracker*'s filter with a synthetic bearing of the evader's own
/// true position taken from the estimated tracker position, then solves the
/// game at tracker* and returns the maximin (column) heading.
inline EvaderGameOutcome evader_game(const KinematicState& own_state, const Belief& b_tracker,
                                     InternalModelState& ims, const ActionSet& tracker_headings,
                                     const ActionSet& evader_headings, const EvaderGameSettings& settings,
                                     const NoiseStream& noise, std::uint64_t k) {
  const FilterSettings& f = settings.tracker_star_filter;
  const KinematicState tracker_star{b_tracker.position(), b_tracker.velocity()};
  EvaderGameOutcome out;

  std::optional<double> z;
  try {
    z = measure_bearing(tracker_star.pos, own_state.pos, f.sigma, noise, {k, Channel::SyntheticMeasurement, 0});
  } catch (const DegenerateGeometry&) {
    out.update_skipped = true;
  }
  out.synthetic_bearing = z;

  if (!ims.initialized) {
    const double bearing = z ? *z : own_state.heading();
    ims.simulated_belief = init_belief(tracker_star.pos, bearing, f.sigma, settings.evader_prior);
    ims.initialized = true;
    out.predicted_trace = ims.simulated_belief.cov.trace();
  } else {
    Belief pred;
    if (ims.last_game_heading && ims.simulated_belief.velocity().norm() > 0.0) {
      pred = predict_with_heading(ims.simulated_belief, *ims.last_game_heading, f.delta, f.transition);
    } else {
      pred = predict_standard(ims.simulated_belief, f.transition, f.process);
    }
    out.predicted_trace = pred.cov.trace();
    ims.simulated_belief = pred;
    if (z) {
      try {
        ims.simulated_belief = measurement_update(pred, BearingModel{tracker_star.pos}, *z, f.sigma);
      } catch (const DegenerateGeometry&) {
        out.update_skipped = true;
      }
    }
  }

  PayoffMatrix u;
  try {
    u = build_payoff(tracker_star, ims.simulated_belief, tracker_headings, evader_headings, f.game_model());
  } catch (const DegenerateHeading&) {
    out.decision = {own_state.heading(), own_state.heading(), true};
    ims.last_game_heading = out.decision.own_heading;
    return out;
  }
  const SecurityChoice col = maximin_col(u);
  const SecurityChoice row = minimax_row(u);
  out.decision = {evader_headings[static_cast<std::size_t>(col.index)],
                  tracker_headings[static_cast<std::size_t>(row.index)], false};
  ims.last_game_heading = out.decision.own_heading;
  return out;
}

}  // namespace pursuit

#endif  // PURSUIT_STRATEGIES_HPP
