#include "extprof/psi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace extprof {
namespace {

constexpr double kFloorSafety = 2.6;   // observed steps per stability length
constexpr double kFloorBudget = 5e4;   // step allowance for the tail

inline double clamped_pow(double psi, double e) {
  return std::pow(std::max(psi, 0.0), e);
}

double default_y0(const Params& params) {
  const double y0 = std::pow(10.0, -12.0 / (3.0 * params.pm1_op));
  return std::clamp(y0, 1e-300, 1e-8);
}

}  // namespace

PsiSeriesStart psi_series_start(const Params& params, double a, double y0) {
  if (!(a > 0.0)) throw std::invalid_argument("psi_series_start: a must be positive");
  if (!(y0 > 0.0 && y0 < 1.0)) throw std::invalid_argument("psi_series_start: y0 outside (0,1)");
  const double p = params.p;
  const double b = psi_initial_slope(params, a);
  const double bpow = std::pow(b, params.pm1_op);  // b^{(p-1)/p}
  const double c1 = p * p / (params.pm1 * (2.0 * p - 1.0)) * bpow;
  const double ylog = std::log(y0);
  // Fractional exponents via exp(e log y0): more accurate than repeated pow.
  const double y_mu = std::exp((1.0 + params.pm1_op) * ylog);
  const double y_mu2 = std::exp((1.0 + 2.0 * params.pm1_op) * ylog);
  const double y_2mu = std::exp((2.0 + params.pm1_op) * ylog);
  PsiSeriesStart s;
  s.y0 = y0;
  s.psi0 = b * y0 - c1 * y_mu + c1 * std::pow(b, -1.0 / p) * p / (3.0 * p - 2.0) * y_mu2 -
           0.5 * b * y0 * y0 + 0.5 * bpow * p / (3.0 * p - 1.0) * y_2mu;
  return s;
}

double auto_psi_floor(const Params& params, double a) {
  const double A = nullcline_amplitude(params, a);
  const double s1 =
      std::pow(params.pm1 / (params.two_mp * kFloorSafety * std::pow(A, 1.0 / params.p) *
                             kFloorBudget),
               params.pm1 / params.two_mp);
  return A * std::pow(s1, params.q);
}

PsiTrajectory integrate_psi(const Params& params, double a, const PsiOptions& opts) {
  if (!(a > 0.0)) throw std::invalid_argument("integrate_psi: a must be positive");
  const double y0 = opts.y0 > 0.0 ? opts.y0 : default_y0(params);
  if (!(y0 < opts.y_end && opts.y_end < 1.0)) {
    throw std::invalid_argument("integrate_psi: need y0 < y_end < 1");
  }

  const double q = params.q;
  const double pm1_op = params.pm1_op;
  const double a2mp = std::pow(a, params.two_mp);
  auto rhs = [q, pm1_op, a2mp](double y, std::span<const double> psi, std::span<double> d) {
    d[0] = q * (a2mp * (1.0 - y) - clamped_pow(psi[0], pm1_op));
  };
  auto clamp_state = [](double, std::span<double> psi) {
    if (psi[0] < 0.0) psi[0] = 0.0;
  };

  // Phase one: run to the psi peak (the sign change of psi'). The floor is
  // meaningless before the peak, and arming it from the start would trip on
  // the small initial values.
  std::vector<EventSpec> events1;
  EventSpec peak;
  peak.event_fn = [pm1_op, a2mp](double y, std::span<const double> psi) {
    return a2mp * (1.0 - y) - clamped_pow(psi[0], pm1_op);
  };
  peak.direction = EventDirection::falling;
  events1.push_back(peak);
  for (const EventSpec& ev : opts.extra_events) events1.push_back(ev);

  StepControl ctrl1 = opts.ctrl;
  ctrl1.h_init = std::min(opts.ctrl.h_init, 0.25 * y0);
  ctrl1.h_min = std::min(opts.ctrl.h_min, 1e-6 * ctrl1.h_init);

  const PsiSeriesStart start = psi_series_start(params, a, y0);
  Trajectory path = integrate_adaptive(rhs, start.y0, std::span<const double>(&start.psi0, 1),
                                       opts.y_end, ctrl1, events1, clamp_state);

  auto check_stop = [](const Trajectory& tr) {
    if (tr.stop_reason() == StopReason::step_underflow) {
      raise(Errc::step_underflow,
            "psi integration stalled at y=" + std::to_string(tr.back_time()));
    }
    if (tr.stop_reason() == StopReason::max_steps) {
      raise(Errc::max_steps_exceeded, "psi integration exceeded the step budget");
    }
  };
  check_stop(path);

  PsiTrajectory out;
  out.params = params;
  out.a = a;
  out.y_end_requested = opts.y_end;

  bool peaked = false;
  if (path.stop_reason() == StopReason::event_hit) {
    const EventHit hit = *path.event();
    if (hit.event_index == 0) {
      peaked = true;
      out.y_peak = hit.t;
    } else {
      out.extra_hit = EventHit{hit.event_index - 1, hit.t};
    }
  }

  if (peaked) {
    const double y_pk = path.back_time();
    const double psi_pk = path.back_state()[0];
    double floor = 0.0;
    if (opts.psi_floor == 0.0) {
      floor = auto_psi_floor(params, a);
    } else if (opts.psi_floor > 0.0) {
      floor = opts.psi_floor;
    }
    out.floor_used = floor;

    if (floor > 0.0 && psi_pk <= floor) {
      // The whole tail sits below the resolvable scale.
      out.hit_floor = true;
    } else {
      std::vector<EventSpec> events2;
      EventSpec floor_ev;
      // With the floor disabled the guard value -1 keeps psi - guard
      // positive forever, so the event slot stays inert.
      const double guard = floor > 0.0 ? floor : -1.0;
      floor_ev.event_fn = [guard](double, std::span<const double> psi) {
        return psi[0] - guard;
      };
      floor_ev.direction = EventDirection::falling;
      events2.push_back(floor_ev);
      for (const EventSpec& ev : opts.extra_events) events2.push_back(ev);

      StepControl ctrl2 = opts.ctrl;
      ctrl2.h_min = std::min(opts.ctrl.h_min, ctrl1.h_min);
      ctrl2.h_init = std::clamp(
          std::min(3.0 * std::pow(psi_pk, 1.0 / params.p), 0.25 * (opts.y_end - y_pk)),
          10.0 * ctrl2.h_min, ctrl2.h_max);

      Trajectory tail = integrate_adaptive(rhs, y_pk, path.back_state(), opts.y_end, ctrl2,
                                           events2, clamp_state);
      check_stop(tail);
      if (tail.stop_reason() == StopReason::event_hit) {
        const EventHit hit = *tail.event();
        if (hit.event_index == 0) {
          out.hit_floor = true;
        } else {
          out.extra_hit = EventHit{hit.event_index - 1, hit.t};
        }
      }
      path.extend(std::move(tail));
    }
  }

  // Shape scan: psi rises before the peak and falls after it. Gated above
  // the noise scale; consecutive nodes differ by one step's local error, so
  // the slack is a generous multiple of the step tolerance.
  const double gate = 10.0 * std::max(out.floor_used, opts.ctrl.abs_tol);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double lo = path.state(i, 0), hi = path.state(i + 1, 0);
    if (std::max(lo, hi) <= gate) continue;
    const double slack = 50.0 * (opts.ctrl.abs_tol + opts.ctrl.rel_tol * std::abs(lo));
    const bool before_peak = !out.y_peak || path.time(i + 1) <= *out.y_peak;
    if (before_peak ? (hi < lo - slack) : (hi > lo + slack)) {
      raise(Errc::shape_violation,
            "psi not single-peaked near y=" + std::to_string(path.time(i)));
    }
  }

  out.path = std::move(path);
  return out;
}

double tail_estimate(const PsiTrajectory& traj) {
  if (traj.hit_floor) return 0.0;
  const double y_end = traj.y_end();
  if (y_end < 1.0 - 1e-4) {
    raise(Errc::insufficient_range,
          "tail estimate needs y_end >= 1-1e-4, got y_end=" + std::to_string(y_end));
  }
  const double s1 = 1.0 - y_end;
  const double psi1 = traj.path.back_state()[0];
  if (psi1 <= critical_envelope(traj.params, y_end)) return 0.0;
  const double s0 = 10.0 * s1;
  const double psi0 = traj.psi_at(1.0 - s0);
  return psi1 - s1 * (psi0 - psi1) / (s0 - s1);
}

OrderingReport compare_on_grid(const PsiTrajectory& lo, const PsiTrajectory& hi, std::size_t n) {
  if (lo.params.p != hi.params.p) {
    raise(Errc::mismatched_params, "compare_on_grid: p differs");
  }
  if (lo.a > hi.a) {
    raise(Errc::mismatched_params, "compare_on_grid: need lo.a <= hi.a");
  }
  if (n < 2) raise(Errc::too_few_nodes, "compare_on_grid: need n >= 2");
  const double y_lo = std::max(lo.path.front_time(), hi.path.front_time());
  const double y_hi = std::min(lo.path.back_time(), hi.path.back_time());
  if (!(y_hi > y_lo)) raise(Errc::range_mismatch, "compare_on_grid: spans do not overlap");

  OrderingReport rep;
  rep.nodes_compared = n;
  double max_abs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = y_lo + (y_hi - y_lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    const double gap = hi.psi_at(y) - lo.psi_at(y);
    if (k == 0) {
      rep.min_gap = rep.max_gap = gap;
    } else {
      rep.min_gap = std::min(rep.min_gap, gap);
      rep.max_gap = std::max(rep.max_gap, gap);
    }
    max_abs = std::max(max_abs, std::abs(gap));
  }
  rep.gap_at_half = (y_lo <= 0.5 && 0.5 <= y_hi)
                        ? hi.psi_at(0.5) - lo.psi_at(0.5)
                        : std::numeric_limits<double>::quiet_NaN();
  rep.holder_ratio =
      hi.a > lo.a ? max_abs / std::pow(hi.a - lo.a, lo.params.two_mp) : 0.0;
  return rep;
}

TransformReport transform_check(const ProfileTrajectory& profile, const PsiTrajectory& psi) {
  if (profile.params.p != psi.params.p || profile.a != psi.a) {
    raise(Errc::mismatched_params, "transform_check: (p, a) differ");
  }
  const double a = profile.a;
  const double apow = std::pow(a, profile.params.p);
  const double y_lo = psi.path.front_time();
  const double y_hi = psi.path.back_time();

  TransformReport rep;
  for (std::size_t i = 0; i < profile.path.size(); ++i) {
    const double y = 1.0 - profile.path.state(i, 0) / a;
    if (y < y_lo || y > y_hi) continue;
    const double g = profile.path.state(i, 1);
    const double mapped = std::pow(std::max(g, 0.0), profile.params.q) / apow;
    rep.max_defect = std::max(rep.max_defect, std::abs(psi.psi_at(y) - mapped));
    ++rep.nodes_compared;
  }
  if (rep.nodes_compared < 2) {
    raise(Errc::range_mismatch, "transform_check: fewer than 2 profile nodes land in the psi span");
  }
  return rep;
}

}  // namespace extprof
