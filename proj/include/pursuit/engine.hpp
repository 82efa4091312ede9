#ifndef PURSUIT_ENGINE_HPP
#define PURSUIT_ENGINE_HPP

// One pursuit run: measurement, filtering, decisions, motion and win
// adjudication.
//
// Time index k labels a snapshot: true states at k and both beliefs after
// the bearing taken at k. Snapshot 0 holds the initialized beliefs. From
// k = 1 on, every snapshot is adjudicated; the first one that produces a
// winner is k_stop. Decisions made at k move the players to k + 1.

#include "pursuit/ckf.hpp"
#include "pursuit/core.hpp"
#include "pursuit/game.hpp"
#include "pursuit/scenario.hpp"
#include "pursuit/strategies.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pursuit {

enum class Winner { Tracker, Evader };
enum class Metric { CovTrace, EstError, TrueDistance, Timeout };
enum class Bound { Min, Max, Timeout };

inline std::string_view to_string(Winner w) { return w == Winner::Tracker ? "tracker" : "evader"; }

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::CovTrace: return "cov_trace";
    case Metric::EstError: return "est_error";
    case Metric::TrueDistance: return "true_distance";
    case Metric::Timeout: return "timeout";
  }
  return "?";
}

inline std::string_view to_string(Bound b) {
  switch (b) {
    case Bound::Min: return "min";
    case Bound::Max: return "max";
    case Bound::Timeout: return "timeout";
  }
  return "?";
}

struct MetricSample {
  int k = 0;
  double cov_trace = 0.0;      // trace of the tracker's evader-position covariance
  double est_error = 0.0;      // |estimated evader position - true evader position|
  double true_distance = 0.0;  // |tracker - evader|
};

struct Adjudication {
  Winner winner = Winner::Evader;
  Metric metric = Metric::Timeout;
  Bound bound = Bound::Timeout;
};

/// Tracker wins on any metric below its minimum; otherwise the evader wins
/// on any metric above its maximum or when k reaches k_max.
inline std::optional<Adjudication> adjudicate(const MetricSample& m, const Thresholds& th, int k, int k_max) {
  const std::array<std::pair<Metric, double>, 3> values{
      {{Metric::CovTrace, m.cov_trace}, {Metric::EstError, m.est_error}, {Metric::TrueDistance, m.true_distance}}};
  const std::array<Bounds, 3> bounds{th.cov_trace, th.est_error, th.true_distance};
  for (std::size_t i = 0; i < 3; ++i) {
    if (values[i].second < bounds[i].min) return Adjudication{Winner::Tracker, values[i].first, Bound::Min};
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (values[i].second > bounds[i].max) return Adjudication{Winner::Evader, values[i].first, Bound::Max};
  }
  if (k >= k_max) return Adjudication{Winner::Evader, Metric::Timeout, Bound::Timeout};
  return std::nullopt;
}

/// Everything that changes during a run.
struct World {
  int k = 0;
  KinematicState tracker;
  KinematicState evader;
  Belief tracker_belief;  // tracker's estimate of the evader
  Belief evader_belief;   // evader's estimate of the tracker

  std::optional<double> evader_star_heading;   // tracker's model of the evader
  std::optional<double> tracker_star_heading;  // evader's model of the tracker
  LinearEscape linear_plan;
  InternalModelState tracker_star;

  // Full covariance traces before the last measurement update.
  double tracker_predicted_trace = std::numeric_limits<double>::quiet_NaN();
  double evader_predicted_trace = std::numeric_limits<double>::quiet_NaN();
};

struct StepRecord {
  int k = 0;
  KinematicState tracker;
  KinematicState evader;
  Belief tracker_belief;
  Belief evader_belief;
  double tracker_predicted_trace = std::numeric_limits<double>::quiet_NaN();
  double evader_predicted_trace = std::numeric_limits<double>::quiet_NaN();
  MetricSample metrics;
};

struct RunRecord {
  std::string scenario_id;
  std::uint64_t seed = 0;
  double tracker_speed = 0.0;
  double evader_speed = 0.0;
  TrackerAction tracker_action = TrackerAction::CovarianceMin;
  EvaderAction evader_action = EvaderAction::LinearEscape;
  int k_max = 0;
  Thresholds thresholds;

  bool valid = true;
  std::string invalid_reason;
  Winner winner = Winner::Evader;
  int k_stop = 0;
  Metric trigger_metric = Metric::Timeout;
  Bound trigger_bound = Bound::Timeout;

  int fallbacks = 0;               // decisions that had to fall back
  int covariance_violations = 0;   // symmetric / PSD / trace-reduction failures
  std::vector<StepRecord> steps;

  const MetricSample& final_metrics() const { return steps.back().metrics; }
};

inline std::string scenario_id(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "vt" << c.tracker_speed << "_ve" << c.evader_speed << '_' << to_string(c.tracker_action) << '_'
     << to_string(c.evader_action);
  return os.str();
}

enum class DecisionOrder { TrackerFirst, EvaderFirst };

/// Scenario constants plus the step function. Holds no per-run mutable state.
class Engine {
 public:
  Engine(const ScenarioConfig& config, std::uint64_t seed)
      : config_(config),
        noise_(seed),
        tracker_headings_(ActionSet::uniform(config.tracker_grid_n)),
        evader_headings_(ActionSet::uniform(config.evader_grid_n)) {
    validate(config);
    const TransitionModel f = TransitionModel::constant_velocity(config.delta);
    const ProcessNoise q = ProcessNoise::white_acceleration(config.q_x, config.q_y, config.delta);
    tracker_filter_ = {config.delta, config.sigma_bearing_on_evader, f, q};
    evader_filter_ = {config.delta, config.sigma_bearing_on_tracker, f, q};
  }

  const ScenarioConfig& config() const { return config_; }
  const NoiseStream& noise() const { return noise_; }
  const ActionSet& tracker_headings() const { return tracker_headings_; }
  const ActionSet& evader_headings() const { return evader_headings_; }
  const FilterSettings& tracker_filter() const { return tracker_filter_; }
  const FilterSettings& evader_filter() const { return evader_filter_; }

  std::pair<Vec2, Vec2> initial_positions() const {
    return init_positions(noise_, config_.tracker_box, config_.evader_box);
  }

  /// Snapshot k = 0: positions, first bearings and initialized beliefs.
  World initial_world() const {
    const auto [tp, ep] = initial_positions();
    World w;
    w.k = 0;
    const double z_e = measure_bearing(tp, ep, tracker_filter_.sigma, noise_, {0, Channel::TrackerMeasuresEvader, 0});
    const double z_t = measure_bearing(ep, tp, evader_filter_.sigma, noise_, {0, Channel::EvaderMeasuresTracker, 0});

    double evader_heading = true_bearing(tp, ep);
    if (config_.linear_heading == LinearHeadingRule::Random) {
      evader_heading = noise_.uniform({0, Channel::InitialHeading, 0}, -kPi, kPi);
    }
    w.tracker = KinematicState::from_heading(tp, config_.tracker_speed, z_e);
    w.evader = KinematicState::from_heading(ep, config_.evader_speed, evader_heading);
    w.linear_plan = {evader_heading};

    if (config_.exact_initial_beliefs) {
      w.tracker_belief = exact_belief(w.evader);
      w.evader_belief = exact_belief(w.tracker);
      w.tracker_star.initialized = true;
      w.tracker_star.simulated_belief = exact_belief(w.evader);
    } else {
      w.tracker_belief = init_belief(tp, z_e, tracker_filter_.sigma, config_.evader_prior);
      w.evader_belief = init_belief(ep, z_t, evader_filter_.sigma, config_.tracker_prior);
    }
    return w;
  }

  /// Replaces the beliefs of `w` (at time w.k >= 1) with the
  /// measurement-updated ones. Returns the number of invariant violations.
  int observe(World& w) const {
    int violations = 0;
    const std::uint64_t k = static_cast<std::uint64_t>(w.k);

    const Belief t_pred = predict(w.tracker_belief, tracker_filter_,
                                  config_.tracker_action == TrackerAction::GameTheoretic ? w.evader_star_heading
                                                                                          : std::nullopt);
    const Belief e_pred = predict(w.evader_belief, evader_filter_,
                                  config_.evader_action == EvaderAction::GameTheoretic ? w.tracker_star_heading
                                                                                        : std::nullopt);
    w.tracker_predicted_trace = t_pred.cov.trace();
    w.evader_predicted_trace = e_pred.cov.trace();
    w.tracker_belief = t_pred;
    w.evader_belief = e_pred;
    try {
      const double z_e = measure_bearing(w.tracker.pos, w.evader.pos, tracker_filter_.sigma, noise_,
                                         {k, Channel::TrackerMeasuresEvader, 0});
      const double z_t = measure_bearing(w.evader.pos, w.tracker.pos, evader_filter_.sigma, noise_,
                                         {k, Channel::EvaderMeasuresTracker, 0});
      w.tracker_belief = safe_update(t_pred, w.tracker.pos, z_e, tracker_filter_.sigma);
      w.evader_belief = safe_update(e_pred, w.evader.pos, z_t, evader_filter_.sigma);
    } catch (const DegenerateGeometry&) {
      // Coincident players: no bearing exists; the distance metric ends the run.
    }
    violations += audit(w.tracker_predicted_trace, w.tracker_belief.cov);
    violations += audit(w.evader_predicted_trace, w.evader_belief.cov);
    return violations;
  }

  MetricSample metrics(const World& w) const {
    return {w.k, w.tracker_belief.position_trace(), (w.tracker_belief.position() - w.evader.pos).norm(),
            (w.tracker.pos - w.evader.pos).norm()};
  }

  struct Decisions {
    double tracker_heading = 0.0;
    double evader_heading = 0.0;
    int fallbacks = 0;
    int violations = 0;
  };

  /// Both players choose headings from their own information only. The two
  /// decisions are independent, so `order` never changes the outcome.
  Decisions decide(World& w, DecisionOrder order = DecisionOrder::TrackerFirst) const {
    Decisions d;
    if (order == DecisionOrder::TrackerFirst) {
      decide_tracker(w, d);
      decide_evader(w, d);
    } else {
      decide_evader(w, d);
      decide_tracker(w, d);
    }
    return d;
  }

  void move(World& w, const Decisions& d) const {
    w.tracker = advance_at(w.tracker.pos, d.tracker_heading, config_.tracker_speed);
    w.evader = advance_at(w.evader.pos, d.evader_heading, config_.evader_speed);
    ++w.k;
  }

  /// Full per-step transition k -> k + 1: decide, move, observe.
  World step(World w, DecisionOrder order = DecisionOrder::TrackerFirst) const {
    const Decisions d = decide(w, order);
    move(w, d);
    observe(w);
    return w;
  }

 private:
  Belief exact_belief(const KinematicState& s) const {
    Belief b;
    b.mean << s.pos, s.vel;
    const double sd = config_.exact_initial_std;
    b.cov = sd * sd * Mat4::Identity();
    return b;
  }

  static Belief predict(const Belief& b, const FilterSettings& f, std::optional<double> heading) {
    if (heading && b.velocity().norm() > 0.0) return predict_with_heading(b, *heading, f.delta, f.transition);
    return predict_standard(b, f.transition, f.process);
  }

  static Belief safe_update(const Belief& pred, const Vec2& observer, double z, double sigma) {
    try {
      return measurement_update(pred, BearingModel{observer}, z, sigma);
    } catch (const DegenerateGeometry&) {
      return pred;
    }
  }

  static int audit(double predicted_trace, const Mat4& updated) {
    int v = 0;
    if (!is_symmetric(updated)) ++v;
    if (!is_psd(updated)) ++v;
    if (updated.trace() > predicted_trace + 1e-9) ++v;
    return v;
  }

  KinematicState advance_at(const Vec2& pos, double heading, double speed) const {
    const Vec2 dir = unit(heading);
    return {pos + config_.delta * speed * dir, speed * dir};
  }

  void decide_tracker(World& w, Decisions& d) const {
    if (config_.tracker_action == TrackerAction::CovarianceMin) {
      const HeadingDecision h = tracker_covmin(w.tracker_belief, w.tracker, tracker_headings_, tracker_filter_);
      d.tracker_heading = h.heading;
      d.fallbacks += h.fallback;
    } else {
      const GameDecision g =
          tracker_game(w.tracker_belief, w.tracker, tracker_headings_, evader_headings_, tracker_filter_);
      d.tracker_heading = g.own_heading;
      d.fallbacks += g.fallback;
      w.evader_star_heading = g.fallback ? std::nullopt : std::optional<double>(g.opponent_heading);
    }
  }

  void decide_evader(World& w, Decisions& d) const {
    if (config_.evader_action == EvaderAction::LinearEscape) {
      d.evader_heading = evader_linear(w.linear_plan);
      return;
    }
    const EvaderGameSettings settings{tracker_filter_, config_.evader_prior};
    const bool had_model = w.tracker_star.initialized;
    const EvaderGameOutcome out = evader_game(w.evader, w.evader_belief, w.tracker_star, tracker_headings_,
                                              evader_headings_, settings, noise_, static_cast<std::uint64_t>(w.k));
    if (had_model) d.violations += audit(out.predicted_trace, w.tracker_star.simulated_belief.cov);
    d.evader_heading = out.decision.own_heading;
    d.fallbacks += out.decision.fallback;
    w.tracker_star_heading = out.decision.fallback ? std::nullopt : std::optional<double>(out.decision.opponent_heading);
  }

  ScenarioConfig config_;
  NoiseStream noise_;
  ActionSet tracker_headings_;
  ActionSet evader_headings_;
  FilterSettings tracker_filter_;
  FilterSettings evader_filter_;
};

inline StepRecord snapshot(const World& w, const MetricSample& m) {
  return {w.k, w.tracker, w.evader, w.tracker_belief, w.evader_belief, w.tracker_predicted_trace,
          w.evader_predicted_trace, m};
}

/// Executes one run to its stop time. Deterministic in (config, seed).
inline RunRecord run(const ScenarioConfig& config, std::uint64_t seed) {
  const Engine engine(config, seed);
  RunRecord rec;
  rec.scenario_id = scenario_id(config);
  rec.seed = seed;
  rec.tracker_speed = config.tracker_speed;
  rec.evader_speed = config.evader_speed;
  rec.tracker_action = config.tracker_action;
  rec.evader_action = config.evader_action;
  rec.k_max = config.k_max;
  rec.thresholds = config.thresholds;
  rec.steps.reserve(static_cast<std::size_t>(config.k_max) + 1);

  try {
    World w = engine.initial_world();
    rec.steps.push_back(snapshot(w, engine.metrics(w)));
    while (true) {
      const Engine::Decisions d = engine.decide(w);
      rec.fallbacks += d.fallbacks;
      rec.covariance_violations += d.violations;
      engine.move(w, d);
      rec.covariance_violations += engine.observe(w);
      const MetricSample m = engine.metrics(w);
      rec.steps.push_back(snapshot(w, m));
      if (const auto verdict = adjudicate(m, config.thresholds, w.k, config.k_max)) {
        rec.winner = verdict->winner;
        rec.trigger_metric = verdict->metric;
        rec.trigger_bound = verdict->bound;
        rec.k_stop = w.k;
        break;
      }
    }
  } catch (const NonPsdCovariance& e) {
    rec.valid = false;
    rec.invalid_reason = e.what();
  } catch (const NumericalFailure& e) {
    rec.valid = false;
    rec.invalid_reason = e.what();
  }
  if (!rec.valid) rec.k_stop = rec.steps.empty() ? 0 : rec.steps.back().k;
  return rec;
}

}  // namespace pursuit

#endif  // PURSUIT_ENGINE_HPP
