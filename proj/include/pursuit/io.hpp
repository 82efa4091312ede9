#ifndef PURSUIT_IO_HPP
#define PURSUIT_IO_HPP

// JSON configuration files and line-delimited run records.
//
// Record file layout (UTF-8, LF): the first line is a header object with
// "type": "header" carrying the run outcome and thresholds; every following
// line is a "type": "step" object for k = 0 .. k_stop. Covariances are 16
// numbers in row-major order; undefined values are null.

#include "pursuit/engine.hpp"
#include "pursuit/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace pursuit {

using nlohmann::json;

namespace detail {

/// Object reader that rejects keys nobody asked about.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~StrictObject() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key: " + path_ + key);
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return path_ + key; }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + key + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Vec2 read_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(path + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void read_bounds(StrictObject& parent, const std::string& key, Bounds& b) {
  if (!parent.has(key)) return;
  StrictObject o(parent.at(key), parent.path(key) + ".");
  o.read("min", b.min);
  o.read("max", b.max);
}

inline void read_box(StrictObject& parent, const std::string& key, Box& b) {
  if (!parent.has(key)) return;
  StrictObject o(parent.at(key), parent.path(key) + ".");
  if (o.has("center")) b.center = read_vec2(o.at("center"), o.path("center"));
  o.read("half_width", b.half_width);
}

inline void read_prior(StrictObject& parent, const std::string& key, BeliefPrior& p) {
  if (!parent.has(key)) return;
  StrictObject o(parent.at(key), parent.path(key) + ".");
  o.read("range_mean", p.range_mean);
  o.read("range_std", p.range_std);
  o.read("speed_mean", p.speed_mean);
  o.read("speed_std", p.speed_std);
  o.read("heading_offset", p.heading_offset);
}

template <class Parse>
auto read_enum(StrictObject& o, const std::string& key, Parse parse) {
  try {
    return parse(o.at(key).get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(o.path(key) + ": " + e.what());
  }
}

inline json bounds_json(const Bounds& b) { return {{"min", b.min}, {"max", b.max}}; }

inline json thresholds_json(const Thresholds& t) {
  return {{"cov_trace", bounds_json(t.cov_trace)},
          {"est_error", bounds_json(t.est_error)},
          {"true_distance", bounds_json(t.true_distance)}};
}

inline json prior_json(const BeliefPrior& p) {
  return {{"range_mean", p.range_mean},
          {"range_std", p.range_std},
          {"speed_mean", p.speed_mean},
          {"speed_std", p.speed_std},
          {"heading_offset", p.heading_offset}};
}

inline json box_json(const Box& b) {
  return {{"center", {b.center.x(), b.center.y()}}, {"half_width", b.half_width}};
}

inline ScenarioConfig parse_config(const json& j) {
  ScenarioConfig c;
  StrictObject o(j, "");
  o.read("tracker_speed", c.tracker_speed);
  o.read("evader_speed", c.evader_speed);
  if (o.has("tracker_action")) c.tracker_action = read_enum(o, "tracker_action", parse_tracker_action);
  if (o.has("evader_action")) c.evader_action = read_enum(o, "evader_action", parse_evader_action);
  o.read("n_runs", c.n_runs);
  o.read("k_max", c.k_max);
  o.read("delta", c.delta);
  o.read("sigma_bearing_on_evader", c.sigma_bearing_on_evader);
  o.read("sigma_bearing_on_tracker", c.sigma_bearing_on_tracker);
  if (o.has("process_noise")) {
    StrictObject q(o.at("process_noise"), "process_noise.");
    q.read("q_x", c.q_x);
    q.read("q_y", c.q_y);
  }
  if (o.has("thresholds")) {
    StrictObject t(o.at("thresholds"), "thresholds.");
    read_bounds(t, "cov_trace", c.thresholds.cov_trace);
    read_bounds(t, "est_error", c.thresholds.est_error);
    read_bounds(t, "true_distance", c.thresholds.true_distance);
  }
  o.read("eta", c.thresholds.cov_trace.min);
  if (o.has("grid")) {
    StrictObject g(o.at("grid"), "grid.");
    g.read("tracker_n", c.tracker_grid_n);
    g.read("evader_n", c.evader_grid_n);
  }
  if (o.has("init")) {
    StrictObject i(o.at("init"), "init.");
    read_box(i, "tracker_box", c.tracker_box);
    read_box(i, "evader_box", c.evader_box);
    if (i.has("linear_heading")) {
      const std::string rule = i.at("linear_heading").get<std::string>();
      if (rule == "away_from_tracker") {
        c.linear_heading = LinearHeadingRule::AwayFromTracker;
      } else if (rule == "random") {
        c.linear_heading = LinearHeadingRule::Random;
      } else {
        throw ConfigError("init.linear_heading: unknown rule " + rule);
      }
    }
    i.read("exact_beliefs", c.exact_initial_beliefs);
    i.read("exact_std", c.exact_initial_std);
  }
  if (o.has("priors")) {
    StrictObject p(o.at("priors"), "priors.");
    read_prior(p, "evader", c.evader_prior);
    read_prior(p, "tracker", c.tracker_prior);
  }
  o.read("master_seed", c.master_seed);
  if (o.has("sweep")) {
    StrictObject s(o.at("sweep"), "sweep.");
    if (s.has("speed_pairs")) {
      c.sweep.speed_pairs.clear();
      for (const json& p : s.at("speed_pairs")) {
        const Vec2 v = read_vec2(p, "sweep.speed_pairs");
        c.sweep.speed_pairs.push_back({v.x(), v.y()});
      }
    }
    if (s.has("tracker_actions")) {
      c.sweep.tracker_actions.clear();
      for (const json& a : s.at("tracker_actions")) c.sweep.tracker_actions.push_back(parse_tracker_action(a.get<std::string>()));
    }
    if (s.has("evader_actions")) {
      c.sweep.evader_actions.clear();
      for (const json& a : s.at("evader_actions")) c.sweep.evader_actions.push_back(parse_evader_action(a.get<std::string>()));
    }
  }
  return c;
}

}  // namespace detail

/// Parses a configuration document. Missing keys keep their defaults;
/// unknown keys and type mismatches raise ConfigError. A top-level "eta"
/// sets the covariance-trace minimum threshold.
inline ScenarioConfig config_from_json(const json& j) {
  try {
    return detail::parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline json config_to_json(const ScenarioConfig& c) {
  using namespace detail;
  json pairs = json::array();
  for (const SpeedPair& p : c.sweep.speed_pairs) pairs.push_back({p.tracker, p.evader});
  json tracker_actions = json::array();
  for (TrackerAction a : c.sweep.tracker_actions) tracker_actions.push_back(to_string(a));
  json evader_actions = json::array();
  for (EvaderAction a : c.sweep.evader_actions) evader_actions.push_back(to_string(a));
  return {
      {"tracker_speed", c.tracker_speed},
      {"evader_speed", c.evader_speed},
      {"tracker_action", to_string(c.tracker_action)},
      {"evader_action", to_string(c.evader_action)},
      {"n_runs", c.n_runs},
      {"k_max", c.k_max},
      {"delta", c.delta},
      {"sigma_bearing_on_evader", c.sigma_bearing_on_evader},
      {"sigma_bearing_on_tracker", c.sigma_bearing_on_tracker},
      {"process_noise", {{"q_x", c.q_x}, {"q_y", c.q_y}}},
      {"thresholds", thresholds_json(c.thresholds)},
      {"grid", {{"tracker_n", c.tracker_grid_n}, {"evader_n", c.evader_grid_n}}},
      {"init",
       {{"tracker_box", box_json(c.tracker_box)},
        {"evader_box", box_json(c.evader_box)},
        {"linear_heading", c.linear_heading == LinearHeadingRule::Random ? "random" : "away_from_tracker"},
        {"exact_beliefs", c.exact_initial_beliefs},
        {"exact_std", c.exact_initial_std}}},
      {"priors", {{"evader", prior_json(c.evader_prior)}, {"tracker", prior_json(c.tracker_prior)}}},
      {"master_seed", c.master_seed},
      {"sweep", {{"speed_pairs", pairs}, {"tracker_actions", tracker_actions}, {"evader_actions", evader_actions}}},
  };
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

class RecordFormatError : public std::runtime_error {
 public:
  explicit RecordFormatError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double num_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json state_json(const KinematicState& s) {
  return {{"pos", {s.pos.x(), s.pos.y()}}, {"vel", {s.vel.x(), s.vel.y()}}};
}

inline KinematicState state_from(const json& j) {
  return {read_vec2(j.at("pos"), "pos"), read_vec2(j.at("vel"), "vel")};
}

inline json belief_json(const Belief& b) {
  json mean = json::array();
  json cov = json::array();
  for (int i = 0; i < 4; ++i) mean.push_back(b.mean(i));
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) cov.push_back(b.cov(r, c));
  }
  return {{"mean", mean}, {"cov", cov}};
}

inline Belief belief_from(const json& j) {
  Belief b;
  const json& mean = j.at("mean");
  const json& cov = j.at("cov");
  if (mean.size() != 4 || cov.size() != 16) throw RecordFormatError("belief has wrong dimensions");
  for (int i = 0; i < 4; ++i) b.mean(i) = mean[i].get<double>();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) b.cov(r, c) = cov[r * 4 + c].get<double>();
  }
  return b;
}

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> values) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw RecordFormatError("unknown enum value: " + s);
}

}  // namespace detail

inline json record_header_json(const RunRecord& r) {
  using namespace detail;
  return {
      {"type", "header"},
      {"scenario_id", r.scenario_id},
      {"seed", r.seed},
      {"tracker_speed", r.tracker_speed},
      {"evader_speed", r.evader_speed},
      {"tracker_action", to_string(r.tracker_action)},
      {"evader_action", to_string(r.evader_action)},
      {"k_max", r.k_max},
      {"thresholds", thresholds_json(r.thresholds)},
      {"valid", r.valid},
      {"invalid_reason", r.invalid_reason},
      {"winner", to_string(r.winner)},
      {"k_stop", r.k_stop},
      {"trigger_metric", to_string(r.trigger_metric)},
      {"trigger_bound", to_string(r.trigger_bound)},
      {"fallbacks", r.fallbacks},
      {"covariance_violations", r.covariance_violations},
      {"n_steps", r.steps.size()},
  };
}

inline json step_json(const StepRecord& s) {
  using namespace detail;
  return {
      {"type", "step"},
      {"k", s.k},
      {"tracker", state_json(s.tracker)},
      {"evader", state_json(s.evader)},
      {"tracker_belief", belief_json(s.tracker_belief)},
      {"evader_belief", belief_json(s.evader_belief)},
      {"tracker_predicted_trace", num(s.tracker_predicted_trace)},
      {"evader_predicted_trace", num(s.evader_predicted_trace)},
      {"metrics",
       {{"cov_trace", num(s.metrics.cov_trace)},
        {"est_error", num(s.metrics.est_error)},
        {"true_distance", num(s.metrics.true_distance)}}},
  };
}

inline void write_record(std::ostream& os, const RunRecord& r) {
  os << record_header_json(r).dump() << '\n';
  for (const StepRecord& s : r.steps) os << step_json(s).dump() << '\n';
}

inline RunRecord read_record(std::istream& in) {
  using namespace detail;
  RunRecord r;
  std::string line;
  if (!std::getline(in, line)) throw RecordFormatError("empty record file");
  std::size_t expected = 0;
  try {
    const json h = json::parse(line);
    if (h.at("type") != "header") throw RecordFormatError("first line is not a header");
    r.scenario_id = h.at("scenario_id").get<std::string>();
    r.seed = h.at("seed").get<std::uint64_t>();
    r.tracker_speed = h.at("tracker_speed").get<double>();
    r.evader_speed = h.at("evader_speed").get<double>();
    r.tracker_action = parse_tracker_action(h.at("tracker_action").get<std::string>());
    r.evader_action = parse_evader_action(h.at("evader_action").get<std::string>());
    r.k_max = h.at("k_max").get<int>();
    const json& t = h.at("thresholds");
    for (auto [key, b] : {std::pair{"cov_trace", &r.thresholds.cov_trace},
                          std::pair{"est_error", &r.thresholds.est_error},
                          std::pair{"true_distance", &r.thresholds.true_distance}}) {
      b->min = t.at(key).at("min").get<double>();
      b->max = t.at(key).at("max").get<double>();
    }
    r.valid = h.at("valid").get<bool>();
    r.invalid_reason = h.at("invalid_reason").get<std::string>();
    r.winner = enum_from(h.at("winner").get<std::string>(), {Winner::Tracker, Winner::Evader});
    r.k_stop = h.at("k_stop").get<int>();
    r.trigger_metric = enum_from(h.at("trigger_metric").get<std::string>(),
                                 {Metric::CovTrace, Metric::EstError, Metric::TrueDistance, Metric::Timeout});
    r.trigger_bound = enum_from(h.at("trigger_bound").get<std::string>(), {Bound::Min, Bound::Max, Bound::Timeout});
    r.fallbacks = h.at("fallbacks").get<int>();
    r.covariance_violations = h.at("covariance_violations").get<int>();
    expected = h.at("n_steps").get<std::size_t>();

    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json s = json::parse(line);
      if (s.at("type") != "step") throw RecordFormatError("unexpected line type");
      StepRecord st;
      st.k = s.at("k").get<int>();
      st.tracker = state_from(s.at("tracker"));
      st.evader = state_from(s.at("evader"));
      st.tracker_belief = belief_from(s.at("tracker_belief"));
      st.evader_belief = belief_from(s.at("evader_belief"));
      st.tracker_predicted_trace = num_from(s.at("tracker_predicted_trace"));
      st.evader_predicted_trace = num_from(s.at("evader_predicted_trace"));
      const json& m = s.at("metrics");
      st.metrics = {st.k, num_from(m.at("cov_trace")), num_from(m.at("est_error")), num_from(m.at("true_distance"))};
      r.steps.push_back(st);
    }
  } catch (const json::exception& e) {
    throw RecordFormatError(std::string("malformed record: ") + e.what());
  } catch (const ConfigError& e) {
    throw RecordFormatError(std::string("malformed record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw RecordFormatError(std::string("malformed record: ") + e.what());
  }
  if (r.steps.size() != expected) {
    throw RecordFormatError("truncated record: expected " + std::to_string(expected) + " steps, found " +
                            std::to_string(r.steps.size()));
  }
  return r;
}

/// Recomputes the outcome of a stored record from its metric timeline.
inline std::optional<std::pair<int, Adjudication>> readjudicate(const RunRecord& r) {
  for (const StepRecord& s : r.steps) {
    if (s.k < 1) continue;
    if (const auto v = adjudicate(s.metrics, r.thresholds, s.k, r.k_max)) return std::pair{s.k, *v};
  }
  return std::nullopt;
}

}  // namespace pursuit

#endif  // PURSUIT_IO_HPP
