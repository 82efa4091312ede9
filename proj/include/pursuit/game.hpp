#ifndef PURSUIT_GAME_HPP
#define PURSUIT_GAME_HPP

// Zero-sum heading game: payoff is the trace of the hypothesized updated
// position covariance. The row player (tracker) minimizes, the column player
// (evader) maximizes. Only pure security strategies are solved.

#include "pursuit/ckf.hpp"
#include "pursuit/core.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pursuit {

/// Finite set of absolute headings available to one player.
class ActionSet {
 public:
  ActionSet() = default;
  explicit ActionSet(std::vector<double> headings) : headings_(std::move(headings)) {
    if (headings_.empty()) throw std::invalid_argument("action set must not be empty");
  }

  /// N headings spaced 2*pi/N apart, strictly increasing in (-pi, pi].
  static ActionSet uniform(int n) {
    if (n < 1) throw std::invalid_argument("action set size must be positive");
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) h[j] = -kPi + kTwoPi * (j + 1) / n;
    h.back() = kPi;
    return ActionSet(std::move(h));
  }

  std::size_t size() const { return headings_.size(); }
  double operator[](std::size_t i) const { return headings_[i]; }
  const std::vector<double>& headings() const { return headings_; }

 private:
  std::vector<double> headings_;
};

struct PayoffMatrix {
  Eigen::MatrixXd values;  // rows: tracker headings, cols: evader headings

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return values(r, c); }
};

struct SecurityChoice {
  Eigen::Index index = 0;
  double value = 0.0;
};

/// Row minimizing the worst-case (maximum) column; lowest index on ties.
inline SecurityChoice minimax_row(const PayoffMatrix& u) {
  if (u.rows() == 0 || u.cols() == 0) throw std::invalid_argument("empty payoff matrix");
  SecurityChoice best{0, u.values.row(0).maxCoeff()};
  for (Eigen::Index r = 1; r < u.rows(); ++r) {
    const double worst = u.values.row(r).maxCoeff();
    if (worst < best.value) best = {r, worst};
  }
  return best;
}

/// Column maximizing the worst-case (minimum) row; lowest index on ties.
inline SecurityChoice maximin_col(const PayoffMatrix& u) {
  if (u.rows() == 0 || u.cols() == 0) throw std::invalid_argument("empty payoff matrix");
  SecurityChoice best{0, u.values.col(0).minCoeff()};
  for (Eigen::Index c = 1; c < u.cols(); ++c) {
    const double worst = u.values.col(c).minCoeff();
    if (worst > best.value) best = {c, worst};
  }
  return best;
}

/// A predicted belief prepared for repeated hypothetical updates from
/// different observer positions. Cubature points depend only on the
/// prediction, so they are computed once.
class Hypothesis {
 public:
  explicit Hypothesis(const Belief& prediction) : prediction_(prediction), points_(cubature_points(prediction)) {}

  const Belief& prediction() const { return prediction_; }

  /// Trace of the position block after a covariance-only bearing update taken
  /// from `observer`. A degenerate geometry yields no information gain.
  double updated_position_trace(const Vec2& observer, double sigma) const {
    const double prior = prediction_.position_trace();
    PredictedMeasurement pm;
    try {
      pm = predicted_bearing(points_, observer);
    } catch (const DegenerateGeometry&) {
      return prior;
    }
    const InnovationStats s = innovation_stats(points_, pm, prediction_, sigma);
    const double reduction = (s.P_xz(0) * s.P_xz(0) + s.P_xz(1) * s.P_xz(1)) / s.P_zz;
    return std::max(prior - reduction, 0.0);
  }

 private:
  Belief prediction_;
  CubatureSet points_;
};

inline double hypothesized_trace(const Belief& prediction, const Vec2& observer_next, double sigma) {
  return Hypothesis(prediction).updated_position_trace(observer_next, sigma);
}

/// Fixed per-player data that the payoff construction needs.
struct GameModel {
  double delta = 1.0;
  double sigma = 0.02;  // bearing noise of the row player's sensor
  TransitionModel transition = TransitionModel::constant_velocity(1.0);
};

/// Entry (l, m): the row player moves along rows[l] at its own speed, the
/// column player's estimate is moved along cols[m] at its estimated speed,
/// and the resulting position-covariance trace is recorded.
inline PayoffMatrix build_payoff(const KinematicState& row_player, const Belief& b, const ActionSet& rows,
                                 const ActionSet& cols, const GameModel& model) {
  std::vector<Hypothesis> columns;
  columns.reserve(cols.size());
  for (std::size_t m = 0; m < cols.size(); ++m) {
    columns.emplace_back(predict_with_heading(b, cols[m], model.delta, model.transition));
  }
  std::vector<Vec2> observers(rows.size());
  for (std::size_t l = 0; l < rows.size(); ++l) {
    observers[l] = advance(row_player, rows[l], model.delta).pos;
  }
  PayoffMatrix u{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()))};
  for (std::size_t m = 0; m < cols.size(); ++m) {
    for (std::size_t l = 0; l < rows.size(); ++l) {
      u.values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m)) =
          columns[m].updated_position_trace(observers[l], model.sigma);
    }
  }
  return u;
}

}  // namespace pursuit

#endif  // PURSUIT_GAME_HPP
