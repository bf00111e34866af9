#include "extprof/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "extprof/errors.hpp"
#include "extprof/quadrature.hpp"

namespace extprof {
namespace {

// Linear extrapolation to 1/r = 0 through (r_end/2, P_half) and (r_end, P_end).
double richardson_in_inverse_r(double p_half, double p_end) { return 2.0 * p_end - p_half; }

DecayingFit fit_decaying(const ProfileTrajectory& profile) {
  if (profile.crossing) {
    raise(Errc::wrong_label, "decaying fit requested on a profile with a crossing");
  }
  const double sigma = profile.params.exp_slow;
  const double r_end = profile.path.back_time();
  const double r_tenth = 0.1 * r_end;
  if (!(r_tenth > profile.path.front_time())) {
    raise(Errc::insufficient_range, "trajectory too short to monitor the last decade of r");
  }
  const auto product = [&](double r) { return std::pow(r, sigma) * profile.f(r); };
  const double p_end = product(r_end);
  if (!(p_end > 0.0)) {
    raise(Errc::not_converged, "tail product vanished before the extrapolation radius");
  }
  const double drift = std::abs(p_end - product(r_tenth)) / p_end;
  if (!(drift < 1e-3)) {
    raise(Errc::not_converged, "tail product still drifting over the last decade of r");
  }
  DecayingFit fit;
  fit.exponent = sigma;
  fit.constant_estimate = richardson_in_inverse_r(product(0.5 * r_end), p_end);
  fit.slow_const = profile.params.slow_const;
  fit.relative_gap = std::abs(fit.constant_estimate - fit.slow_const) / fit.slow_const;
  fit.drift = drift;
  return fit;
}

CriticalFit fit_critical(const ProfileTrajectory& profile) {
  const Params& pr = profile.params;
  const double rate = pr.exp_fast;
  const double lo = profile.path.front_time();
  // Cap the sampled range so exp(rate * r) stays representable.
  const double hi = std::min(profile.path.back_time(), 700.0 / rate);
  constexpr double kWindow = 5.0;
  constexpr double kStep = 0.05;
  constexpr double kBand = 0.10;
  if (!(hi - lo >= kWindow)) {
    raise(Errc::insufficient_range, "trajectory shorter than the plateau window");
  }

  const std::size_t n = static_cast<std::size_t>(std::floor((hi - lo) / kStep)) + 1;
  std::vector<double> rs(n), qs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rs[i] = lo + static_cast<double>(i) * kStep;
    qs[i] = std::exp(rate * rs[i]) * profile.f(rs[i]);
  }
  const std::size_t w = static_cast<std::size_t>(std::lround(kWindow / kStep));

  // Flattest window of length kWindow: sliding min/max over w+1 samples.
  std::deque<std::size_t> mins, maxs;
  double best_var = std::numeric_limits<double>::infinity();
  std::size_t best_start = n;
  for (std::size_t i = 0; i < n; ++i) {
    while (!mins.empty() && qs[mins.back()] >= qs[i]) mins.pop_back();
    mins.push_back(i);
    while (!maxs.empty() && qs[maxs.back()] <= qs[i]) maxs.pop_back();
    maxs.push_back(i);
    if (i < w) continue;
    const std::size_t start = i - w;
    if (mins.front() < start) mins.pop_front();
    if (maxs.front() < start) maxs.pop_front();
    const double q_mid = qs[start + w / 2];
    if (!(qs[mins.front()] > 0.0)) continue;
    const double var = (qs[maxs.front()] - qs[mins.front()]) / q_mid;
    if (var < best_var) {
      best_var = var;
      best_start = start;
    }
  }
  if (best_start == n || !(best_var <= kBand)) {
    raise(Errc::not_converged, "no flat window of exp(r/(p-1)) f(r) found");
  }

  CriticalFit fit;
  fit.rate = rate;
  fit.plateau_r_lo = rs[best_start];
  fit.plateau_r_hi = rs[best_start + w];
  fit.plateau_variation = best_var;
  double level = 0.0;
  for (std::size_t i = best_start; i <= best_start + w; ++i) level += qs[i];
  level /= static_cast<double>(w + 1);
  fit.plateau_value = level;

  fit.crossover_r = hi;
  for (std::size_t i = best_start + w + 1; i < n; ++i) {
    if (std::abs(qs[i] / level - 1.0) > kBand) {
      fit.crossover_r = rs[i];
      break;
    }
  }

  // I = int_0^inf e^s f(s) ds: series head below the launch radius, dense
  // quadrature up to the crossover, exponential bound past it.
  const double rc = fit.crossover_r;
  double integral = profile.a * std::expm1(lo);
  const auto integrand = [&](double s) { return std::exp(s) * std::max(profile.f(s), 0.0); };
  for (std::size_t k = 0; k + 1 < profile.path.size(); ++k) {
    const double seg_lo = std::max(profile.path.time(k), lo);
    const double seg_hi = std::min(profile.path.time(k + 1), rc);
    if (!(seg_hi > seg_lo)) continue;
    const double scale = 1.0 + std::exp(seg_lo) * std::max(profile.path.state(k, 0), 0.0);
    integral += adaptive_simpson(integrand, seg_lo, seg_hi, 1e-13 * scale * (seg_hi - seg_lo));
  }
  fit.remainder = integrand(std::min(rc, profile.path.back_time())) * 2.0 * pr.pm1 / pr.two_mp;
  fit.integral = integral + fit.remainder;
  fit.ell_star = pr.pm1 * std::pow(fit.integral, rate);
  return fit;
}

}  // namespace

double suggested_tail_radius(const Params& params, double a) {
  const double alpha = 1.0 / params.exp_slow;
  // Offset constant of the 1/r correction: a matching part, empirically
  // close to 13/(p-1) across the exponent range, plus the quasi-static
  // a^{-1/s}/alpha that dominates for small heights.
  const double c_eff = 13.0 / params.pm1 + std::pow(a, -alpha) / alpha;
  const double r_need = 9.0 * params.exp_slow * c_eff / (alpha * 1e-3);
  return 2.5 * r_need;
}

TailFit fit_tail(const ProfileTrajectory& profile, const ClassLabel& label) {
  switch (label.regime) {
    case Regime::crossing:
      if (!profile.crossing) {
        raise(Errc::wrong_label, "crossing fit requested on a profile without a crossing");
      }
      return {Regime::crossing, CrossingFit{profile.crossing->radius, profile.crossing->slope}};
    case Regime::decaying:
      return {Regime::decaying, fit_decaying(profile)};
    case Regime::critical:
    default:
      return {Regime::critical, fit_critical(profile)};
  }
}

SelfSimilarSlice reconstruct_selfsimilar(const ProfileTrajectory& profile, double T, double t,
                                         std::span<const double> x_grid) {
  if (!(T > 0.0)) throw std::invalid_argument("reconstruct_selfsimilar: T must be positive");
  if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("reconstruct_selfsimilar: t outside [0, T]");
  const Params& pr = profile.params;
  const double r_lo = profile.path.front_time();
  const double r_hi = profile.path.back_time();
  // Span check before anything else: a grid beyond the integrated radius is
  // an error even when the prefactor vanishes at t = T.
  if (!profile.crossing) {
    for (double x : x_grid) {
      if (std::abs(x) > r_hi) raise(Errc::out_of_span, "grid point beyond the integrated radius");
    }
  }
  const double prefactor = std::pow(pr.two_mp * (T - t), 1.0 / pr.two_mp);

  SelfSimilarSlice slice;
  slice.T = T;
  slice.t = t;
  slice.x.assign(x_grid.begin(), x_grid.end());
  slice.u.reserve(x_grid.size());
  for (double x : x_grid) {
    const double r = std::abs(x);
    double f;
    if (profile.crossing && r >= profile.crossing->radius) {
      f = 0.0;
    } else if (r < r_lo) {
      f = (r == 0.0) ? profile.a : profile_series_start(pr, profile.a, r).f0;
    } else {
      f = profile.f(r);
    }
    slice.u.push_back(prefactor * std::max(f, 0.0));
  }
  return slice;
}

}  // namespace extprof
