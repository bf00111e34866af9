#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "extprof/errors.hpp"
#include "extprof/ode.hpp"

using namespace extprof;

namespace {

void decay_rhs(double, std::span<const double> y, std::span<double> out) { out[0] = -y[0]; }

void circle_rhs(double, std::span<const double> y, std::span<double> out) {
  out[0] = y[1];
  out[1] = -y[0];
}

Trajectory run_decay(const StepControl& ctrl, double t_end = 5.0) {
  const std::vector<double> y0{1.0};
  return integrate_adaptive(decay_rhs, 0.0, y0, t_end, ctrl);
}

}  // namespace

TEST_CASE("exponential decay tracks the exact solution") {
  const Trajectory traj = run_decay(StepControl{});
  REQUIRE(traj.stop_reason() == StopReason::reached_end);
  CHECK(traj.back_time() == 5.0);  // endpoint is landed on exactly
  CHECK(std::abs(traj.back_state()[0] - std::exp(-5.0)) < 1e-9);

  double worst_state = 0.0;
  double worst_deriv = 0.0;
  for (int i = 0; i <= 500; ++i) {
    const double t = 5.0 * i / 500.0;
    worst_state = std::max(worst_state, std::abs(traj.dense_eval(t, 0) - std::exp(-t)));
    worst_deriv = std::max(worst_deriv, std::abs(traj.dense_derivative(t, 0) + std::exp(-t)));
  }
  CHECK(worst_state < 1e-8);
  CHECK(worst_deriv < 1e-6);
}

TEST_CASE("dense output reproduces stored nodes exactly") {
  const Trajectory traj = run_decay(StepControl{});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj.dense_eval(traj.time(i), 0) == traj.state(i, 0));
  }
  CHECK_THROWS_AS(traj.dense_eval(traj.back_time() + 1.0, 0), SolverError);
  CHECK_THROWS_AS(traj.dense_eval(traj.front_time() - 1.0, 0), SolverError);
}

TEST_CASE("harmonic oscillator returns to its start after one period") {
  StepControl ctrl;
  ctrl.h_max = 0.2;
  const std::vector<double> y0{1.0, 0.0};
  const double period = 2.0 * std::numbers::pi;
  const Trajectory traj = integrate_adaptive(circle_rhs, 0.0, y0, period, ctrl);
  REQUIRE(traj.stop_reason() == StopReason::reached_end);
  CHECK(std::abs(traj.back_state()[0] - 1.0) < 1e-8);
  CHECK(std::abs(traj.back_state()[1]) < 1e-8);
}

TEST_CASE("tighter tolerances give smaller endpoint error") {
  StepControl coarse;
  coarse.abs_tol = 1e-5;
  coarse.rel_tol = 1e-5;
  StepControl fine;
  fine.abs_tol = 1e-11;
  fine.rel_tol = 1e-11;
  const double exact = std::exp(-5.0);
  const double err_coarse = std::abs(run_decay(coarse).back_state()[0] - exact);
  const double err_fine = std::abs(run_decay(fine).back_state()[0] - exact);
  CHECK(err_fine < err_coarse);
  CHECK(err_fine < 1e-10);
}

TEST_CASE("falling event is located and terminates the trajectory") {
  std::vector<EventSpec> events(1);
  events[0].event_fn = [](double, std::span<const double> y) { return y[0] - 0.5; };
  events[0].direction = EventDirection::falling;
  const std::vector<double> y0{1.0};
  const Trajectory traj =
      integrate_adaptive(decay_rhs, 0.0, y0, 5.0, StepControl{}, events);
  REQUIRE(traj.stop_reason() == StopReason::event_hit);
  REQUIRE(traj.event().has_value());
  CHECK(traj.event()->event_index == 0);
  CHECK(std::abs(traj.event()->t - std::log(2.0)) < 1e-9);
  CHECK(traj.back_time() == traj.event()->t);
  CHECK(std::abs(traj.back_state()[0] - 0.5) < 1e-9);
}

TEST_CASE("event direction filter skips the wrong-side crossing") {
  // cos(t) falls through 0 at pi/2 and rises through 0 at 3 pi/2; a rising
  // detector must report the later root.
  std::vector<EventSpec> events(1);
  events[0].event_fn = [](double, std::span<const double> y) { return y[0]; };
  events[0].direction = EventDirection::rising;
  StepControl ctrl;
  ctrl.h_max = 0.2;
  const std::vector<double> y0{1.0, 0.0};
  const Trajectory traj = integrate_adaptive(circle_rhs, 0.0, y0, 8.0, ctrl, events);
  REQUIRE(traj.stop_reason() == StopReason::event_hit);
  CHECK(std::abs(traj.event()->t - 1.5 * std::numbers::pi) < 1e-8);
}

TEST_CASE("step budget exhaustion is reported, not thrown") {
  StepControl ctrl;
  ctrl.max_steps = 10;
  ctrl.h_max = 1e-3;
  const Trajectory traj = run_decay(ctrl);
  CHECK(traj.stop_reason() == StopReason::max_steps);
  CHECK(traj.back_time() < 5.0);
}

TEST_CASE("unresolvable right-hand side underflows the step") {
  StepControl ctrl;
  ctrl.h_init = 0.1;
  ctrl.h_min = 0.1;
  ctrl.h_max = 0.5;
  const auto stiff = [](double t, std::span<const double>, std::span<double> out) {
    out[0] = std::cos(1000.0 * t);
  };
  const std::vector<double> y0{0.0};
  const Trajectory traj = integrate_adaptive(stiff, 0.0, y0, 5.0, ctrl);
  CHECK(traj.stop_reason() == StopReason::step_underflow);
}

TEST_CASE("non-finite right-hand side raises") {
  const auto bad = [](double t, std::span<const double> y, std::span<double> out) {
    out[0] = t < 1.0 ? -y[0] : std::nan("");
  };
  const std::vector<double> y0{1.0};
  try {
    integrate_adaptive(bad, 0.0, y0, 5.0, StepControl{});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == Errc::non_finite_rhs);
  }
}

TEST_CASE("control validation rejects inconsistent settings") {
  StepControl bad;
  bad.h_init = 1e-16;  // below h_min
  CHECK_THROWS_AS(run_decay(bad), std::invalid_argument);
  StepControl zero;
  zero.abs_tol = 0.0;
  zero.rel_tol = 0.0;
  CHECK_THROWS_AS(run_decay(zero), std::invalid_argument);
  CHECK_THROWS_AS(run_decay(StepControl{}, /*t_end=*/-1.0), std::invalid_argument);
}

TEST_CASE("pure relative control is accepted") {
  StepControl ctrl;
  ctrl.abs_tol = 0.0;
  const Trajectory traj = run_decay(ctrl);
  REQUIRE(traj.stop_reason() == StopReason::reached_end);
  CHECK(std::abs(traj.back_state()[0] - std::exp(-5.0)) < 1e-9);
}

TEST_CASE("projection hook adjusts accepted states") {
  const StateProjection clamp = [](double, std::span<double> y) {
    if (y[0] < 0.6) y[0] = 0.6;
  };
  const std::vector<double> y0{1.0};
  const Trajectory traj =
      integrate_adaptive(decay_rhs, 0.0, y0, 5.0, StepControl{}, {}, clamp);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj.state(i, 0) >= 0.6);
  }
}

TEST_CASE("identical inputs produce bit-identical trajectories") {
  const Trajectory one = run_decay(StepControl{});
  const Trajectory two = run_decay(StepControl{});
  REQUIRE(one.size() == two.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one.time(i) == two.time(i));
    CHECK(one.state(i, 0) == two.state(i, 0));
    CHECK(one.derivative(i, 0) == two.derivative(i, 0));
  }
}
