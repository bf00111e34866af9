#pragma once

// Quantitative tail behavior of computed profiles, one extractor per regime:
//
//   * crossing profiles terminate at a finite radius R with slope f'(R) < 0;
//     the fit simply reports the event data.
//   * critical profiles decay like f ~ ell * exp(-r/(p-1)); the constant is
//     recovered two independent ways, from a plateau of exp(r/(p-1)) f(r)
//     and from ell = (p-1) I^{1/(p-1)} with I = int_0^inf e^r f(r) dr.
//   * slowly decaying profiles obey r^{(p-1)/(2-p)} f(r) -> s^s with
//     s = (p-1)/(2-p), a limit independent of a; the fit extrapolates the
//     product in powers of 1/r.
//
// Also reconstructs spatial slices of the separable extinction solution
// u(t,x) = ((2-p)(T-t)_+)^{1/(2-p)} f(|x|).

#include <span>
#include <variant>
#include <vector>

#include "extprof/classify.hpp"
#include "extprof/profile.hpp"

namespace extprof {

struct CrossingFit {
  double radius;  ///< R(a)
  double slope;   ///< f'(R) < 0
};

struct CriticalFit {
  double rate;                ///< decay rate 1/(p-1)
  double ell_star;            ///< (p-1) I^{1/(p-1)}
  double integral;            ///< I, quadrature over the trajectory plus tail bound
  double remainder;           ///< analytic bound on the truncated part of I
  double plateau_value;       ///< level of exp(r/(p-1)) f(r) over the flattest window
  double plateau_r_lo;        ///< window start
  double plateau_r_hi;        ///< window end
  double plateau_variation;   ///< relative spread of the product over the window
  double crossover_r;         ///< where the product leaves the plateau band again
};

struct DecayingFit {
  double exponent;           ///< (p-1)/(2-p)
  double constant_estimate;  ///< extrapolated limit of r^exponent f(r)
  double slow_const;         ///< exact limit s^s, s = exponent
  double relative_gap;       ///< |constant_estimate - slow_const| / slow_const
  double drift;              ///< relative change of the product over the last decade of r
};

struct TailFit {
  Regime regime;
  std::variant<CrossingFit, CriticalFit, DecayingFit> fit;
};

/// Extracts the tail constants of a profile according to its label.
/// Crossing labels require a recorded crossing and decaying labels forbid
/// one (Errc::wrong_label otherwise). Decaying fits demand that the product
/// r^exponent f(r) moved by less than 1e-3 relatively over [r_end/10, r_end]
/// (Errc::not_converged) and extrapolate it linearly in 1/r from r_end/2 and
/// r_end. Critical fits locate the flattest window of length 5 in r of
/// exp(r/(p-1)) f(r) (relative spread must be below 10%, else
/// Errc::not_converged; span shorter than the window raises
/// Errc::insufficient_range) and integrate I up to the crossover point,
/// bounding the rest with f(r) <= f(rc) e^{-p (r - rc) / (2(p-1))}.
TailFit fit_tail(const ProfileTrajectory& profile, const ClassLabel& label);

/// Integration radius at which a decaying profile's tail product clears the
/// drift gate of fit_tail. The product approaches its limit like
/// 1 - s C / (alpha r) with an offset constant C that measures as roughly
/// 13/(p-1) from matching through the O(1) region plus the quasi-static
/// a^{-1/s}/alpha relevant for small heights; the last-decade drift
/// 9 s C / (alpha r) is inverted at the 1e-3 gate with a 2.5x safety
/// factor. Callers clamp to taste.
double suggested_tail_radius(const Params& params, double a);

struct SelfSimilarSlice {
  double T;               ///< extinction time
  double t;               ///< evaluation time in [0, T]
  std::vector<double> x;  ///< spatial grid as given
  std::vector<double> u;  ///< ((2-p)(T-t))^{1/(2-p)} f(|x|), clamped at 0
};

/// Evaluates the separable solution on a spatial grid at time t. Requires
/// T > 0 and 0 <= t <= T. For profiles without a crossing every |x| must lie
/// within the integrated r-span (Errc::out_of_span); for crossing profiles
/// the solution is 0 for |x| >= R. Points below the series launch radius use
/// the launch series, so x = 0 evaluates exactly to the scaled a.
SelfSimilarSlice reconstruct_selfsimilar(const ProfileTrajectory& profile, double T, double t,
                                         std::span<const double> x_grid);

}  // namespace extprof
