// Transform-plane representation of the profile equation.
//
// With y = 1 - f/a and psi(y) = g(r)^{p/(p-1)} / a^p, the profile ODE becomes
// the scalar initial value problem
//
//   psi'(y) = (p/(p-1)) (a^{2-p} (1-y) - psi^{(p-1)/p}),   psi(0) = 0,
//
// on y in [0, 1). The quotient phi(y) = psi(y) (1-y)^{-p} against the
// critical level kappa = (p-1)^{-p} sorts trajectories: phi exceeding kappa
// signals a zero crossing of f, a vanishing phi' signals decay, and the
// borderline trajectory has phi -> kappa.
//
// The right-hand side has one-sided stiffness: d(rhs)/d(psi) = -psi^{-1/p},
// which blows up as psi collapses onto the nullcline psi = A (1-y)^{p/(p-1)},
// A = a^{p(2-p)/(p-1)}. An explicit integrator pays ~ s^{-(2-p)/(p-1)} steps
// to reach s = 1-y along a collapsed tail, which is unpayable for p near 1.
// integrate_psi therefore arms a resolution floor derived from a fixed step
// budget once the trajectory is past its peak; runs that reach the floor are
// flagged rather than ground out. Trajectories that stay above the floor
// (near-critical and crossing ones do) are unaffected.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "extprof/ode.hpp"
#include "extprof/params.hpp"
#include "extprof/profile.hpp"

namespace extprof {

/// Slope of psi at the origin: psi'(0) = p a^{2-p} / (p-1).
inline double psi_initial_slope(const Params& params, double a) {
  return params.q * std::pow(a, params.two_mp);
}

/// Critical envelope kappa (1-y)^p.
inline double critical_envelope(const Params& params, double y) {
  return params.kappa * std::pow(1.0 - y, params.p);
}

/// Nullcline amplitude A = a^{p(2-p)/(p-1)}; the decaying tail rides
/// psi = A (1-y)^{p/(p-1)}.
inline double nullcline_amplitude(const Params& params, double a) {
  return std::pow(a, params.p * params.two_mp / params.pm1);
}

struct PsiSeriesStart {
  double y0;
  double psi0;
};

/// Series start for the psi equation at small y0. With b = psi'(0) and
/// c1 = p^2 b^{(p-1)/p} / ((p-1)(2p-1)), the expansion is
///   psi = b y - c1 y^{(2p-1)/p} + p c1 b^{-1/p}/(3p-2) y^{(3p-2)/p}
///           - (b/2) y^2 + p b^{(p-1)/p}/(2(3p-1)) y^{(3p-1)/p} + ...
/// The fractional powers come from feeding the leading term back through
/// psi^{(p-1)/p}. The first omitted exponent is 1 + 3(p-1)/p, so the
/// relative truncation is ~ y0^{3(p-1)/p}; pick y0 accordingly (start
/// errors also contract along the flow, the ODE is attracting).
PsiSeriesStart psi_series_start(const Params& params, double a, double y0);

/// Tolerances for psi runs. Near-pure relative control: the trajectory spans
/// many decades on its way down, and any meaningful absolute floor would
/// either drown the tail or stall the head.
inline StepControl default_psi_control() {
  StepControl ctrl;
  ctrl.abs_tol = 1e-30;
  ctrl.rel_tol = 1e-10;
  ctrl.h_init = 2e-9;
  ctrl.h_min = 1e-15;
  ctrl.h_max = 0.02;
  ctrl.max_steps = 2000000;
  return ctrl;
}

struct PsiOptions {
  double y_end = 1.0 - 1e-6;
  StepControl ctrl = default_psi_control();
  /// Resolution floor for the post-peak tail: 0 picks the budget-derived
  /// value, a negative value disables the floor, a positive value is used
  /// as given.
  double psi_floor = 0.0;
  /// Additional terminal events, active in both integration phases.
  std::vector<EventSpec> extra_events;
  /// Series handoff point. 0 picks y0 = 10^{-12/(3(p-1)/p)} clamped to
  /// [1e-300, 1e-8], which puts the series truncation near 1e-12 relative;
  /// the integrator climbs the extra decades geometrically, so starting
  /// deep is cheap.
  double y0 = 0.0;
};

struct PsiTrajectory {
  Params params;
  double a = 0.0;
  Trajectory path{1};
  /// Location of the psi maximum, when the run got that far.
  std::optional<double> y_peak;
  /// True when the run ended on the resolution floor (tail no longer
  /// resolvable within budget) instead of reaching y_end or an event.
  bool hit_floor = false;
  /// Floor value that was armed past the peak; 0 when disabled.
  double floor_used = 0.0;
  /// First extra event hit, if any; event_index refers to
  /// PsiOptions::extra_events, t is the y location.
  std::optional<EventHit> extra_hit;
  double y_end_requested = 0.0;

  double y_end() const { return path.back_time(); }
  double psi_at(double y) const { return path.dense_eval(y, 0); }
  double phi_at(double y) const {
    return path.dense_eval(y, 0) * std::pow(1.0 - y, -params.p);
  }
};

/// Budget-derived resolution floor for the decaying tail of psi.
double auto_psi_floor(const Params& params, double a);

/// Integrates psi from the series start at opts.y0 toward opts.y_end.
/// Phase one runs until the psi peak (terminal event on psi' = 0); past the
/// peak the resolution floor is armed and integration continues until y_end,
/// the floor, or an extra event stops it. Stages clamp psi at zero so the
/// fractional power stays real. After the run the nodes are scanned, gated
/// above the noise scale, for shape violations: psi must rise before the
/// peak and fall after it (Errc::shape_violation otherwise). Integrator
/// stalls propagate as errors.
PsiTrajectory integrate_psi(const Params& params, double a,
                            const PsiOptions& opts = {});

/// Limit of psi at y = 1, extrapolated from the tail. Positive for
/// trajectories that cleared the critical envelope (the limit equals
/// g(R)^{p/(p-1)} / a^p), zero for floor-terminated or enveloped runs.
/// psi = ell + C s + O(s^2) in s = 1-y for the positive-limit case, so one
/// Richardson stage over the last decade of s removes the linear term.
/// Needs y_end >= 1 - 1e-4 unless the run ended on the floor;
/// Errc::insufficient_range otherwise.
double tail_estimate(const PsiTrajectory& traj);

struct OrderingReport {
  /// Extremes of psi_hi - psi_lo over the comparison grid.
  double min_gap = 0.0;
  double max_gap = 0.0;
  /// Gap at y = 1/2; NaN when outside the common span.
  double gap_at_half = 0.0;
  /// max |gap| / (a_hi - a_lo)^{2-p}, the observable Holder quotient.
  double holder_ratio = 0.0;
  std::size_t nodes_compared = 0;
};

/// Compares two psi trajectories with lo.a <= hi.a on a uniform grid over
/// their common y-span. Strict ordering in a predicts min_gap > 0 up to
/// integration noise. Errc::mismatched_params if p differs or lo.a > hi.a,
/// Errc::too_few_nodes for n < 2.
OrderingReport compare_on_grid(const PsiTrajectory& lo, const PsiTrajectory& hi,
                               std::size_t n = 1000);

struct TransformReport {
  /// max over usable profile nodes of |psi(1 - f/a) - g^{p/(p-1)}/a^p|.
  double max_defect = 0.0;
  std::size_t nodes_compared = 0;
};

/// Cross-checks a profile run against a psi run of the same (p, a) through
/// the defining substitution. Profile nodes whose y = 1 - f/a falls outside
/// the psi span are skipped; fewer than 2 usable nodes is
/// Errc::range_mismatch. Errc::mismatched_params if (p, a) differ.
TransformReport transform_check(const ProfileTrajectory& profile,
                                const PsiTrajectory& psi);

}  // namespace extprof
