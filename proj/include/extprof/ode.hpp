#pragma once

// Adaptive explicit Runge-Kutta integration with dense output and terminal
// event detection.
//
//   * Scheme: the Dormand-Prince 5(4) embedded pair (7 stages, FSAL). The
//     fifth-order solution propagates; the fourth-order companion provides
//     the local error estimate.
//   * Error norm: componentwise mixed test
//         err = max_i |e_i| / (abs_tol + rel_tol * max(|y_i|, |y_new_i|)),
//     a step is accepted when err <= 1.
//   * Step controller: classic I-controller, factor 0.9 * err^{-1/5},
//     clamped to [0.2, 5]; growth is suppressed right after a rejection.
//   * Dense output: the free quartic interpolant of the pair. It matches
//     state and derivative at both step endpoints, so queries at nodes
//     reproduce stored values exactly.
//   * Events: scalar functions of (t, state) monitored for sign changes of
//     a requested direction across each accepted step. The first root is
//     refined on the dense output by a safeguarded secant/bisection hybrid
//     (the bracket never widens) and terminates the trajectory there.
//
// Everything is deterministic: identical inputs produce bit-identical
// trajectories.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "extprof/errors.hpp"

namespace extprof {

struct StepControl {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double h_init = 1e-4;
  double h_min = 1e-14;
  double h_max = 1.0;
  long max_steps = 2000000;
};

/// Rejects controls violating h_min <= h_init <= h_max, non-negative
/// tolerances with at least one strictly positive, or max_steps < 1.
void validate_controls(const StepControl& ctrl);

enum class EventDirection { rising, falling, any };

struct EventSpec {
  std::function<double(double, std::span<const double>)> event_fn;
  EventDirection direction = EventDirection::any;
  double root_tol = 1e-12;
};

enum class StopReason { reached_end, event_hit, step_underflow, max_steps };

struct EventHit {
  std::size_t event_index;
  double t;
};

/// Piecewise-polynomial solution record: nodes (t, state, derivative) with
/// strictly increasing t plus the dense-output coefficients of every step.
/// The derivative stored at a node is the right-hand side evaluated there.
class Trajectory {
 public:
  explicit Trajectory(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return t_.size(); }
  bool empty() const noexcept { return t_.empty(); }

  double time(std::size_t i) const { return t_[i]; }
  std::span<const double> state(std::size_t i) const {
    return {y_.data() + i * dim_, dim_};
  }
  std::span<const double> derivative(std::size_t i) const {
    return {f_.data() + i * dim_, dim_};
  }
  double state(std::size_t i, std::size_t comp) const { return y_[i * dim_ + comp]; }
  double derivative(std::size_t i, std::size_t comp) const { return f_[i * dim_ + comp]; }

  double front_time() const { return t_.front(); }
  double back_time() const { return t_.back(); }
  std::span<const double> back_state() const { return state(size() - 1); }

  StopReason stop_reason() const noexcept { return stop_; }
  const std::optional<EventHit>& event() const noexcept { return event_; }

  /// Evaluates the interpolated state at t. Exact at nodes. Throws
  /// Errc::out_of_span outside [front_time, back_time].
  void dense_eval(double t, std::span<double> out) const;
  std::vector<double> dense_eval(double t) const;
  double dense_eval(double t, std::size_t comp) const;

  /// Derivative of the dense interpolant at t (not the right-hand side);
  /// useful as an independent residual probe.
  void dense_derivative(double t, std::span<double> out) const;
  double dense_derivative(double t, std::size_t comp) const;

  // -- construction interface, used by the integrator and by stitching --

  void append_node(double t, std::span<const double> y, std::span<const double> f);
  /// Records dense coefficients for the interval ending at the last node.
  /// h is the step the coefficients were built with; it may exceed the
  /// node spacing after an event truncation.
  void append_dense(double h, std::span<const double> r2, std::span<const double> r3,
                    std::span<const double> r4, std::span<const double> r5);
  /// Replaces the final node (used to cut a step at an event location).
  void replace_last_node(double t, std::span<const double> y, std::span<const double> f);
  void set_stop(StopReason reason, std::optional<EventHit> hit = std::nullopt);

  /// Appends a continuation whose first node coincides with this
  /// trajectory's last node; adopts the continuation's stop state.
  void extend(Trajectory&& tail);

 private:
  std::size_t segment_index(double t) const;

  std::size_t dim_;
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> f_;
  // Per segment: [h, r2(dim), r3(dim), r4(dim), r5(dim)].
  std::vector<double> dense_;
  StopReason stop_ = StopReason::reached_end;
  std::optional<EventHit> event_;
};

using StateProjection = std::function<void(double, std::span<double>)>;

namespace detail {

// Dormand-Prince 5(4) tableau, error weights, and dense-output weights.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
};

/// Safeguarded secant/bisection root refinement on [lo, hi]; requires
/// g(lo), g(hi) of opposite sign. Stops when the bracket is narrower than
/// tol. Defined in ode.cpp.
double refine_event_root(const std::function<double(double)>& g, double lo, double hi,
                         double glo, double ghi, double tol);

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool direction_match(EventDirection dir, double prev, double curr) {
  switch (dir) {
    case EventDirection::rising:
      return prev < 0.0 && curr >= 0.0;
    case EventDirection::falling:
      return prev > 0.0 && curr <= 0.0;
    case EventDirection::any:
      return (prev < 0.0 && curr >= 0.0) || (prev > 0.0 && curr <= 0.0);
  }
  return false;
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) from (t0, y0) to t_end with adaptive steps.
/// rhs must be callable as rhs(double t, span<const double> y, span<double> dydt).
///
/// The trajectory terminates with reason:
///   reached_end     t_end was attained,
///   event_hit       an event sign change was located (trajectory ends there),
///   step_underflow  the controller demanded a step below h_min,
///   max_steps       the attempt budget was exhausted.
/// Throws Errc::non_finite_rhs if the right-hand side produces NaN/Inf.
///
/// `project`, when supplied, may adjust the accepted state in place (e.g.
/// clamping round-off-scale constraint violations) before it is recorded.
template <class RHS>
Trajectory integrate_adaptive(RHS&& rhs, double t0, std::span<const double> y0, double t_end,
                              const StepControl& ctrl, std::span<const EventSpec> events = {},
                              const StateProjection& project = {}) {
  using detail::Dopri5;
  validate_controls(ctrl);
  if (!(t_end > t0)) throw std::invalid_argument("integrate_adaptive: t_end must exceed t0");
  if (y0.empty()) throw std::invalid_argument("integrate_adaptive: empty state");

  const std::size_t n = y0.size();
  Trajectory traj(n);

  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> ytmp(n), ynew(n);
  std::vector<double> r2(n), r3(n), r4(n), r5(n);

  auto eval = [&](double t, const std::vector<double>& state, std::vector<double>& out) {
    rhs(t, std::span<const double>(state), std::span<double>(out));
    if (!detail::all_finite(out)) {
      raise(Errc::non_finite_rhs, "right-hand side returned a non-finite value at t=" +
                                      std::to_string(t));
    }
  };

  double t = t0;
  eval(t, y, k1);
  traj.append_node(t, y, k1);

  std::vector<double> ev_prev(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    ev_prev[i] = events[i].event_fn(t, std::span<const double>(y));
  }

  double h = std::min(ctrl.h_init, ctrl.h_max);
  bool just_rejected = false;
  long attempts = 0;

  while (t < t_end) {
    if (++attempts > ctrl.max_steps) {
      traj.set_stop(StopReason::max_steps);
      return traj;
    }
    const double remaining = t_end - t;
    const bool endpoint_limited = remaining <= h;
    const double hs = endpoint_limited ? remaining : h;
    if (!endpoint_limited && hs < ctrl.h_min) {
      traj.set_stop(StopReason::step_underflow);
      return traj;
    }

    // Stages 2..6 and the fifth-order candidate (stage 7 is FSAL).
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * Dopri5::a21 * k1[i];
    eval(t + Dopri5::c2 * hs, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (Dopri5::a31 * k1[i] + Dopri5::a32 * k2[i]);
    eval(t + Dopri5::c3 * hs, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (Dopri5::a41 * k1[i] + Dopri5::a42 * k2[i] + Dopri5::a43 * k3[i]);
    eval(t + Dopri5::c4 * hs, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (Dopri5::a51 * k1[i] + Dopri5::a52 * k2[i] + Dopri5::a53 * k3[i] +
                             Dopri5::a54 * k4[i]);
    eval(t + Dopri5::c5 * hs, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (Dopri5::a61 * k1[i] + Dopri5::a62 * k2[i] + Dopri5::a63 * k3[i] +
                             Dopri5::a64 * k4[i] + Dopri5::a65 * k5[i]);
    eval(t + hs, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + hs * (Dopri5::b1 * k1[i] + Dopri5::b3 * k3[i] + Dopri5::b4 * k4[i] +
                             Dopri5::b5 * k5[i] + Dopri5::b6 * k6[i]);
    const double t_new = endpoint_limited ? t_end : t + hs;
    eval(t_new, ynew, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = hs * (Dopri5::e1 * k1[i] + Dopri5::e3 * k3[i] + Dopri5::e4 * k4[i] +
                             Dopri5::e5 * k5[i] + Dopri5::e6 * k6[i] + Dopri5::e7 * k7[i]);
      const double scale =
          ctrl.abs_tol + ctrl.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      if (scale <= 0.0 || !std::isfinite(e)) {
        raise(Errc::non_finite_rhs, "error estimate degenerate at t=" + std::to_string(t));
      }
      err = std::max(err, std::abs(e) / scale);
    }

    if (err > 1.0) {
      const double shrink = std::max(0.2, 0.9 * std::pow(err, -0.2));
      h = hs * shrink;
      just_rejected = true;
      if (h < ctrl.h_min) {
        traj.set_stop(StopReason::step_underflow);
        return traj;
      }
      continue;
    }

    // Accepted. Apply the projection, refreshing the FSAL derivative if the
    // state actually changed.
    bool projected = false;
    if (project) {
      const std::vector<double> before = ynew;
      project(t_new, std::span<double>(ynew));
      projected = (before != ynew);
      if (projected) eval(t_new, ynew, k7);
    }

    for (std::size_t i = 0; i < n; ++i) {
      const double dy = ynew[i] - y[i];
      r2[i] = dy;
      r3[i] = hs * k1[i] - dy;
      r4[i] = dy - hs * k7[i] - r3[i];
      r5[i] = hs * (Dopri5::d1 * k1[i] + Dopri5::d3 * k3[i] + Dopri5::d4 * k4[i] +
                    Dopri5::d5 * k5[i] + Dopri5::d6 * k6[i] + Dopri5::d7 * k7[i]);
    }
    traj.append_node(t_new, ynew, k7);
    traj.append_dense(hs, r2, r3, r4, r5);

    // Event scan across the accepted step.
    std::optional<EventHit> first_hit;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double val = events[i].event_fn(t_new, std::span<const double>(ynew));
      if (ev_prev[i] != 0.0 && detail::direction_match(events[i].direction, ev_prev[i], val)) {
        auto g = [&](double tq) {
          std::vector<double> yq = traj.dense_eval(tq);
          return events[i].event_fn(tq, std::span<const double>(yq));
        };
        const double t_root =
            detail::refine_event_root(g, t, t_new, ev_prev[i], val, events[i].root_tol);
        if (!first_hit || t_root < first_hit->t) first_hit = EventHit{i, t_root};
      }
      ev_prev[i] = val;
    }
    if (first_hit) {
      std::vector<double> ye = traj.dense_eval(first_hit->t);
      if (project) project(first_hit->t, std::span<double>(ye));
      std::vector<double> fe(n);
      rhs(first_hit->t, std::span<const double>(ye), std::span<double>(fe));
      traj.replace_last_node(first_hit->t, ye, fe);
      traj.set_stop(StopReason::event_hit, first_hit);
      return traj;
    }

    t = t_new;
    y = ynew;
    k1 = k7;
    const double grow_cap = just_rejected ? 1.0 : 5.0;
    const double factor =
        std::min(grow_cap, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-300), -0.2)));
    h = std::min(hs * factor, ctrl.h_max);
    just_rejected = false;
  }

  traj.set_stop(StopReason::reached_end);
  return traj;
}

}  // namespace extprof
