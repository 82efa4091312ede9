#ifndef PURSUIT_EXPERIMENTS_HPP
#define PURSUIT_EXPERIMENTS_HPP

// Monte-Carlo sweeps over speed pairs and action pairs, aggregation to win
// percentages, and CSV output.

#include "pursuit/engine.hpp"
#include "pursuit/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace pursuit {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// evader/tracker speed ratio as a reduced fraction.
struct Ratio {
  long long num = 1;
  long long den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
  friend bool operator<(const Ratio& a, const Ratio& b) { return a.num * b.den < b.num * a.den; }
};

inline Ratio speed_ratio(double evader_speed, double tracker_speed) {
  constexpr long long kScale = 1000000;
  long long n = std::llround(evader_speed * kScale);
  long long d = std::llround(tracker_speed * kScale);
  const long long g = std::gcd(n, d);
  if (g == 0) throw std::invalid_argument("speed ratio undefined");
  return {n / g, d / g};
}

/// One (speed pair, action pair) combination of a sweep.
struct Cell {
  std::size_t speed_index = 0;
  std::size_t action_index = 0;
  SpeedPair speeds;
  TrackerAction tracker_action = TrackerAction::CovarianceMin;
  EvaderAction evader_action = EvaderAction::LinearEscape;

  Ratio ratio() const { return speed_ratio(speeds.evader, speeds.tracker); }
};

/// Speed pairs in plan order; within each, action pairs with the evader
/// action outermost.
inline std::vector<Cell> cells(const SweepPlan& plan) {
  std::vector<Cell> out;
  for (std::size_t s = 0; s < plan.speed_pairs.size(); ++s) {
    std::size_t a = 0;
    for (EvaderAction e : plan.evader_actions) {
      for (TrackerAction t : plan.tracker_actions) {
        out.push_back({s, a++, plan.speed_pairs[s], t, e});
      }
    }
  }
  return out;
}

/// Stable per-run seed derived from the run's position in the sweep.
inline std::uint64_t run_seed(std::uint64_t master_seed, std::size_t speed_index, std::size_t action_index,
                              std::size_t run_index) {
  std::uint64_t h = splitmix64(master_seed);
  h = hash_combine(h, speed_index);
  h = hash_combine(h, action_index);
  return hash_combine(h, run_index);
}

inline ScenarioConfig cell_config(const ScenarioConfig& base, const Cell& cell) {
  ScenarioConfig c = base;
  c.tracker_speed = cell.speeds.tracker;
  c.evader_speed = cell.speeds.evader;
  c.tracker_action = cell.tracker_action;
  c.evader_action = cell.evader_action;
  return c;
}

/// Per-run outcome kept after the full record is discarded.
struct RunSummary {
  Cell cell;
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  Winner winner = Winner::Evader;
  int k_stop = 0;
  Metric trigger_metric = Metric::Timeout;
  Bound trigger_bound = Bound::Timeout;
  MetricSample final_metrics;
  Vec2 tracker_start = Vec2::Zero();
  Vec2 evader_start = Vec2::Zero();
  int covariance_violations = 0;
  int fallbacks = 0;
};

inline RunSummary summarize(const Cell& cell, std::size_t run_index, const RunRecord& rec) {
  RunSummary s;
  s.cell = cell;
  s.run_index = run_index;
  s.seed = rec.seed;
  s.valid = rec.valid;
  s.winner = rec.winner;
  s.k_stop = rec.k_stop;
  s.trigger_metric = rec.trigger_metric;
  s.trigger_bound = rec.trigger_bound;
  if (!rec.steps.empty()) {
    s.final_metrics = rec.final_metrics();
    s.tracker_start = rec.steps.front().tracker.pos;
    s.evader_start = rec.steps.front().evader.pos;
  }
  s.covariance_violations = rec.covariance_violations;
  s.fallbacks = rec.fallbacks;
  return s;
}

struct CellAggregate {
  Ratio ratio;
  SpeedPair speeds;  // meaningless for pooled rows
  TrackerAction tracker_action = TrackerAction::CovarianceMin;
  EvaderAction evader_action = EvaderAction::LinearEscape;
  int n_runs = 0;
  int n_invalid = 0;
  double tracker_win_pct = 0.0;
  double evader_win_pct = 0.0;
  double mean_k_stop = 0.0;
  double median_k_stop = 0.0;
};

/// Win percentages over the valid runs of one cell (or one pooled group).
inline CellAggregate aggregate(std::span<const RunSummary> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  CellAggregate a;
  a.ratio = runs.front().cell.ratio();
  a.speeds = runs.front().cell.speeds;
  a.tracker_action = runs.front().cell.tracker_action;
  a.evader_action = runs.front().cell.evader_action;
  a.n_runs = static_cast<int>(runs.size());
  int tracker_wins = 0;
  std::vector<int> stops;
  for (const RunSummary& r : runs) {
    if (!r.valid) {
      ++a.n_invalid;
      continue;
    }
    if (r.winner == Winner::Tracker) ++tracker_wins;
    stops.push_back(r.k_stop);
  }
  const int valid = a.n_runs - a.n_invalid;
  if (valid == 0) throw std::invalid_argument("aggregate: no valid runs");
  a.tracker_win_pct = 100.0 * tracker_wins / valid;
  a.evader_win_pct = 100.0 * (valid - tracker_wins) / valid;
  double sum = 0.0;
  for (int k : stops) sum += k;
  a.mean_k_stop = sum / valid;
  std::sort(stops.begin(), stops.end());
  const std::size_t mid = stops.size() / 2;
  a.median_k_stop = stops.size() % 2 ? stops[mid] : 0.5 * (stops[mid - 1] + stops[mid]);
  return a;
}

struct SweepResult {
  std::vector<RunSummary> runs;         // ordered by cell, then run index
  std::vector<CellAggregate> cells;     // one per (speed pair, action pair)
  std::vector<CellAggregate> by_ratio;  // speed pairs with equal ratio pooled
};

/// Called from worker threads with every finished record; must be thread-safe.
using RecordVisitor = std::function<void(const Cell&, std::size_t run_index, const RunRecord&)>;

/// Runs one cell's runs [first, last). Seeds depend only on the cell's
/// position and the run index, never on execution order.
inline std::vector<RunSummary> run_cell(const ScenarioConfig& base, const Cell& cell, std::size_t first,
                                        std::size_t last, const RecordVisitor& visit = {}) {
  const ScenarioConfig c = cell_config(base, cell);
  std::vector<RunSummary> out;
  for (std::size_t i = first; i < last; ++i) {
    const RunRecord rec = run(c, run_seed(base.master_seed, cell.speed_index, cell.action_index, i));
    if (visit) visit(cell, i, rec);
    out.push_back(summarize(cell, i, rec));
  }
  return out;
}

inline std::vector<CellAggregate> pool_by_ratio(const std::vector<RunSummary>& runs) {
  using Key = std::tuple<Ratio, std::size_t>;
  std::map<Key, std::vector<RunSummary>> groups;
  for (const RunSummary& r : runs) groups[{r.cell.ratio(), r.cell.action_index}].push_back(r);
  std::vector<CellAggregate> out;
  for (const auto& [key, group] : groups) out.push_back(aggregate(group));
  return out;
}

/// Executes the full plan with up to `jobs` worker threads. Any invalid
/// configuration aborts before the first run.
inline SweepResult sweep(const ScenarioConfig& base, unsigned jobs = 0, const RecordVisitor& visit = {}) {
  validate(base);
  const std::vector<Cell> plan = cells(base.sweep);
  for (const Cell& c : plan) validate(cell_config(base, c));

  const std::size_t per_cell = static_cast<std::size_t>(base.n_runs);
  const std::size_t total = plan.size() * per_cell;
  SweepResult result;
  result.runs.resize(total);

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(total, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const Cell& cell = plan[i / per_cell];
      const std::size_t r = i % per_cell;
      result.runs[i] = run_cell(base, cell, r, r + 1, visit).front();
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  for (std::size_t c = 0; c < plan.size(); ++c) {
    result.cells.push_back(aggregate(std::span(result.runs).subspan(c * per_cell, per_cell)));
  }
  result.by_ratio = pool_by_ratio(result.runs);
  return result;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string aggregate_csv(const std::vector<CellAggregate>& rows) {
  std::ostringstream os;
  os << "ratio_num,ratio_den,tracker_action,evader_action,n_runs,n_invalid,tracker_win_pct,evader_win_pct,"
        "mean_k_stop,median_k_stop\n";
  for (const CellAggregate& a : rows) {
    os << a.ratio.num << ',' << a.ratio.den << ',' << to_string(a.tracker_action) << ','
       << to_string(a.evader_action) << ',' << a.n_runs << ',' << a.n_invalid << ','
       << format_number(a.tracker_win_pct) << ',' << format_number(a.evader_win_pct) << ','
       << format_number(a.mean_k_stop) << ',' << format_number(a.median_k_stop) << '\n';
  }
  return os.str();
}

/// Per-cell rows, including the speed pair each row was run at.
inline std::string cells_csv(const std::vector<CellAggregate>& rows) {
  std::ostringstream os;
  os << "tracker_speed,evader_speed,ratio_num,ratio_den,tracker_action,evader_action,n_runs,n_invalid,"
        "tracker_win_pct,evader_win_pct,mean_k_stop,median_k_stop\n";
  for (const CellAggregate& a : rows) {
    os << format_number(a.speeds.tracker) << ',' << format_number(a.speeds.evader) << ',' << a.ratio.num << ','
       << a.ratio.den << ',' << to_string(a.tracker_action) << ',' << to_string(a.evader_action) << ','
       << a.n_runs << ',' << a.n_invalid << ',' << format_number(a.tracker_win_pct) << ','
       << format_number(a.evader_win_pct) << ',' << format_number(a.mean_k_stop) << ','
       << format_number(a.median_k_stop) << '\n';
  }
  return os.str();
}

inline std::string runs_csv(const std::vector<RunSummary>& runs) {
  std::ostringstream os;
  os << "tracker_speed,evader_speed,ratio_num,ratio_den,tracker_action,evader_action,run_index,seed,winner,"
        "k_stop,trigger_metric,trigger_bound,final_cov_trace,final_est_error,final_true_distance\n";
  for (const RunSummary& r : runs) {
    const Ratio q = r.cell.ratio();
    os << format_number(r.cell.speeds.tracker) << ',' << format_number(r.cell.speeds.evader) << ',' << q.num
       << ',' << q.den << ',' << to_string(r.cell.tracker_action) << ',' << to_string(r.cell.evader_action) << ','
       << r.run_index << ',' << r.seed << ',' << (r.valid ? to_string(r.winner) : "invalid") << ',' << r.k_stop
       << ',' << to_string(r.trigger_metric) << ',' << to_string(r.trigger_bound) << ','
       << format_number(r.final_metrics.cov_trace) << ',' << format_number(r.final_metrics.est_error) << ','
       << format_number(r.final_metrics.true_distance) << '\n';
  }
  return os.str();
}

}  // namespace pursuit

#endif  // PURSUIT_EXPERIMENTS_HPP
