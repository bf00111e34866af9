#pragma once

// Radial shooting problem for the extinction profile:
//
//     (|f'|^{p-2} f')' + f - |f'|^{p-1} = 0,   f(0) = a > 0,  f'(0) = 0,
//
// integrated as the first-order system in (f, g) with g = -|f'|^{p-2} f':
//
//     f' = -|g|^{(2-p)/(p-1)} g,      g' = -|g| + f.
//
// Along the relevant orbit g > 0, f' = -g^{1/(p-1)} <= 0, and f either stays
// positive (decaying profiles) or crosses zero at a finite radius R(a) with
// strictly negative slope (crossing profiles). Integration always runs
// forward from a series start at a small r0 > 0; the system is degenerate at
// r = 0 itself.

#include <optional>
#include <span>

#include "extprof/ode.hpp"
#include "extprof/params.hpp"

namespace extprof {

struct SeriesStart {
  double r0;
  double f0;
  double g0;
};

/// Truncated power-series launch values at r0. The expansion is
///   f = a - ((p-1)/p) a^{1/(p-1)} r^{p/(p-1)} + a^{1/(p-1)}/(2(2p-1)) r^{(2p-1)/(p-1)},
///   g = a r - (a/2) r^2 + (a/6) r^3 - ((p-1)^2/(p(2p-1))) a^{1/(p-1)} r^{(2p-1)/(p-1)},
/// obtained by substituting the leading orders back into the system.
SeriesStart profile_series_start(const Params& params, double a, double r0);

/// Default launch radius: small enough that the series truncation error is
/// far below integration tolerances for any admissible a.
inline double default_profile_r0(double a) { return 1e-6 * std::max(1.0, 1.0 / a); }

struct CrossingPoint {
  double radius;  ///< R(a), where f reaches 0
  double slope;   ///< f'(R) = -g(R)^{1/(p-1)} < 0
};

struct ProfileTrajectory {
  Params params;
  double a = 0.0;
  Trajectory path{2};  ///< state (f, g) over r
  double r_end = 0.0;
  std::optional<CrossingPoint> crossing;
  StepControl ctrl;  ///< controls the run was produced with

  double f(double r) const { return path.dense_eval(r, 0); }
  double g(double r) const { return path.dense_eval(r, 1); }
  double fprime(double r) const;
};

inline StepControl default_profile_control() {
  StepControl c;
  c.abs_tol = 1e-10;
  c.rel_tol = 1e-10;
  c.h_init = 1e-4;
  c.h_min = 1e-14;
  c.h_max = 0.5;
  c.max_steps = 500000;
  return c;
}

/// Integrates the profile from the series start until f crosses zero or
/// r_max is reached. Checks the interior bounds 0 < f < a, g > 0, the
/// gradient bound g <= a(1 - e^{-r}), and monotonicity of f at
/// every node (up to integration noise); violations throw
/// Errc::invariant_violation. Integrator stalls propagate as errors.
ProfileTrajectory integrate_profile(const Params& params, double a, double r_max = 100.0,
                                    const StepControl& ctrl = default_profile_control());

struct ResidualReport {
  double max_ode_residual;        ///< max |g' - (f - g)| at segment midpoints, from dense output
  double max_identity_defect;     ///< max normalized defect of e^r g(r2)-e^r g(r1) = int e^s f ds
  std::size_t nodes_checked;
};

/// Independent consistency probe of a computed trajectory: differentiates
/// the dense interpolant (not the stored right-hand side) at segment
/// midpoints against the momentum equation, and tests the integral identity
///   e^{r2} g(r2) - e^{r1} g(r1) = \int_{r1}^{r2} e^s f(s) ds
/// over node pairs, normalized by e^{r2} g(r2). Needs >= 3 nodes.
ResidualReport check_residuals(const ProfileTrajectory& traj);

}  // namespace extprof
