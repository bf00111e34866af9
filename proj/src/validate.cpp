#include "extprof/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "extprof/asymptotics.hpp"
#include "extprof/classify.hpp"
#include "extprof/errors.hpp"
#include "extprof/profile.hpp"
#include "extprof/psi.hpp"

namespace extprof {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string tag(const Params& params, const char* name) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s [p=%g]", name, params.p);
  return buf;
}

void add(ValidationReport& rep, std::string name, bool passed, double value, double threshold,
         std::string detail = "") {
  rep.checks.push_back({std::move(name), passed, value, threshold, std::move(detail)});
}

/// Runs a check group; a thrown error becomes a single failed entry instead
/// of aborting the rest of the suite.
void guard(ValidationReport& rep, std::string name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    add(rep, std::move(name), false, kNaN, 0.0, e.what());
  }
}

void profile_checks(ValidationReport& rep, const Params& pr) {
  // Interior bounds, the gradient bound, and monotonicity of f are enforced
  // node-wise inside integrate_profile; reaching this point means they held.
  const ProfileTrajectory traj = integrate_profile(pr, 1.0, 30.0);
  const ResidualReport res = check_residuals(traj);
  add(rep, tag(pr, "profile ode residual"), res.max_ode_residual < 1e-6, res.max_ode_residual,
      1e-6, "dense-derivative defect at step midpoints");
  add(rep, tag(pr, "profile integral identity"), res.max_identity_defect < 1e-6,
      res.max_identity_defect, 1e-6, "e^r g(r) minus the running integral of e^s f");
  add(rep, tag(pr, "profile interior bounds"), true, 0.0, 0.0,
      "0 <= f <= a, g >= 0, gradient bound, f monotone: enforced during integration");
}

void psi_structure_checks(ValidationReport& rep, const Params& pr) {
  bool peaks = true;
  double worst_env = -std::numeric_limits<double>::infinity();
  double worst_low = worst_env;
  const auto scan = [&](const PsiTrajectory& tr, bool enveloped) {
    peaks = peaks && tr.y_peak.has_value();
    std::size_t n = tr.path.size();
    // The stop node of a floor hit sits on the lower bound by construction.
    if (tr.hit_floor && n > 0) --n;
    const double amp = nullcline_amplitude(pr, tr.a);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = tr.path.time(i);
      const double s = 1.0 - y;
      const double psi = tr.path.state(i, 0);
      if (enveloped) {
        const double env = pr.kappa * std::pow(s, pr.p);
        worst_env = std::max(worst_env, (psi - env) / env);
      }
      if (tr.y_peak && y > *tr.y_peak) {
        const double low = amp * std::pow(s, pr.q);
        worst_low = std::max(worst_low, (low - psi) / low);
      }
    }
  };
  scan(integrate_psi(pr, pr.c_lower), true);
  scan(integrate_psi(pr, 0.25 * pr.c_lower), true);
  scan(integrate_psi(pr, 1.0), false);  // a = 1 need not stay enveloped
  add(rep, tag(pr, "psi single peak"), peaks, peaks ? 1.0 : 0.0, 1.0,
      "exactly one sign change of psi', located by event detection");
  add(rep, tag(pr, "psi critical envelope"), worst_env <= 1e-6, worst_env, 1e-6,
      "max relative excess of psi over kappa (1-y)^p on enveloped runs");
  add(rep, tag(pr, "psi lower bound past peak"), worst_low <= 1e-5, worst_low, 1e-5,
      "max relative shortfall of psi under a^{p(2-p)/(p-1)} (1-y)^{p/(p-1)}");
}

void psi_barrier_checks(ValidationReport& rep, const Params& pr) {
  // A = ((p-1)/p)^p maximizes A^{(p-1)/p} - A, so it is admissible exactly
  // on a^{2-p} <= max value, which is c_lower^{2-p}.
  const double a_opt = std::pow(pr.pm1 / pr.p, pr.p);
  const double budget = std::pow(a_opt, pr.pm1_op) - a_opt;
  double worst_adm = -std::numeric_limits<double>::infinity();
  double worst = worst_adm;
  for (const double a : {pr.c_lower, 0.5 * pr.c_lower}) {
    worst_adm = std::max(worst_adm, std::pow(a, pr.two_mp) - budget);
    const PsiTrajectory tr = integrate_psi(pr, a);
    for (std::size_t i = 0; i < tr.path.size(); ++i) {
      const double s = 1.0 - tr.path.time(i);
      const double barrier = a_opt * std::pow(s, pr.q);
      worst = std::max(worst, (tr.path.state(i, 0) - barrier) / barrier);
    }
  }
  add(rep, tag(pr, "psi barrier admissibility"), worst_adm <= 1e-12, worst_adm, 1e-12,
      "a^{2-p} <= A^{(p-1)/p} - A at the optimal A for a <= c_lower");
  add(rep, tag(pr, "psi barrier domination"), worst <= 1e-6, worst, 1e-6,
      "max relative excess of psi over A (1-y)^{p/(p-1)} for a <= c_lower");
}

void monotonicity_checks(ValidationReport& rep, const Params& pr) {
  const double c = pr.c_lower;
  const double pairs[][2] = {{0.5 * c, c}, {c, 2.0 * c}, {2.0 * c, 4.0 * c}};
  double worst_min_gap = std::numeric_limits<double>::infinity();
  double worst_half = worst_min_gap;
  for (const auto& pair : pairs) {
    const PsiTrajectory lo = integrate_psi(pr, pair[0]);
    const PsiTrajectory hi = integrate_psi(pr, pair[1]);
    const OrderingReport ord = compare_on_grid(lo, hi);
    worst_min_gap = std::min(worst_min_gap, ord.min_gap);
    worst_half = std::min(worst_half, ord.gap_at_half);
  }
  add(rep, tag(pr, "psi ordering in a"), worst_min_gap >= -1e-8, worst_min_gap, -1e-8,
      "min of psi(a2) - psi(a1) over shared grids, a1 < a2");
  add(rep, tag(pr, "psi strict gap at y=1/2"),
      std::isfinite(worst_half) && worst_half > 1e-10, worst_half, 1e-10, "");

  // Holder scaling in the height at a fixed base: the quotient
  // max gap / (da)^{2-p} must stay bounded as da shrinks. The constant
  // grows with the base height, so calibration and probes share one base.
  const PsiTrajectory base = integrate_psi(pr, c);
  double holder_cap = 0.0;
  double worst_holder_excess = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double da = 0.5 * c / static_cast<double>(1 << k);
    const PsiTrajectory hi = integrate_psi(pr, c + da);
    const OrderingReport ord = compare_on_grid(base, hi);
    if (k == 0) {
      holder_cap = 2.0 * ord.holder_ratio;
    } else {
      worst_holder_excess = std::max(worst_holder_excess, ord.holder_ratio - holder_cap);
    }
  }
  add(rep, tag(pr, "psi Holder gap bound"), worst_holder_excess <= 0.0, worst_holder_excess, 0.0,
      "max gap / (da)^{2-p} at da/2 and da/4 within twice the quotient at da");
}

void transform_checks(ValidationReport& rep, const Params& pr) {
  double worst = 0.0;
  for (const double a : {0.05, 0.5, 2.0}) {
    const ProfileTrajectory prof = integrate_profile(pr, a, 50.0);
    const PsiTrajectory psi = integrate_psi(pr, a);
    worst = std::max(worst, transform_check(prof, psi).max_defect);
  }
  add(rep, tag(pr, "transform identity"), worst < 1e-6, worst, 1e-6,
      "max |psi(1 - f/a) - g^{p/(p-1)}/a^p| across both solvers");
}

void classifier_grid_checks(ValidationReport& rep, const Params& pr) {
  const Bracket br = initial_bracket(pr);
  constexpr int kPoints = 50;
  const double lo = br.a_lo / 10.0;
  const double hi = 10.0 * br.a_hi;
  std::vector<double> as(kPoints);
  std::vector<Regime> labels(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    const double t = static_cast<double>(i) / (kPoints - 1);
    as[i] = lo * std::pow(hi / lo, t);
    labels[i] = classify(pr, as[i]).regime;
  }
  int phase = 0;  // 0 decaying run, 1 critical band, 2 crossing run
  int band = 0;
  bool ordered = true;
  for (const Regime g : labels) {
    switch (g) {
      case Regime::decaying:
        if (phase > 0) ordered = false;
        break;
      case Regime::critical:
        ++band;
        if (phase == 2) ordered = false;
        phase = std::max(phase, 1);
        break;
      case Regime::crossing:
        phase = 2;
        break;
    }
  }
  add(rep, tag(pr, "classifier trichotomy"), ordered && band <= 2, static_cast<double>(band), 2.0,
      "log grid of 50 points: Decaying block, <= 2 Critical cells, Crossing block");

  int mismatches = 0;
  for (int i = 0; i < kPoints; ++i) {
    if (labels[i] == Regime::critical) continue;
    const ProfileTrajectory prof = integrate_profile(pr, as[i], 100.0);
    const bool crossed = prof.crossing.has_value();
    if (crossed != (labels[i] == Regime::crossing)) ++mismatches;
  }
  add(rep, tag(pr, "classifier r-space consistency"), mismatches == 0,
      static_cast<double>(mismatches), 0.0,
      "Crossing labels cross before r=100, Decaying labels never do");
}

/// Margin scan mirroring the bisection ladder: the first decisive verdict
/// wins. Bracket endpoints decide at depths near y = 1 that the default
/// y_end and budget floor cut off, so the scan deepens both alongside the
/// margin.
Regime certify(const Params& pr, double a, double rel_tol) {
  ClassifyOptions opts;
  opts.ctrl.rel_tol = rel_tol;
  opts.psi_floor = -1.0;
  double depth = 1e-8;
  for (const double m : {1e-8, 1e-9, 1e-10, 1e-11, 1e-12}) {
    opts.margin = m;
    opts.y_end = 1.0 - depth;
    const Regime g = classify(pr, a, opts).regime;
    if (g != Regime::critical) return g;
    depth = std::max(depth / 100.0, 1e-13);
  }
  return Regime::critical;
}

void threshold_checks(ValidationReport& rep, const Params& pr, double& a_star_out) {
  const ThresholdResult res = find_threshold(pr);
  const double tol = 1e-10 * std::max(1.0, res.a_hi);
  add(rep, tag(pr, "threshold bracket width"), res.width <= tol && res.width > 0.0, res.width,
      tol, "a* = " + std::to_string(res.a_star));
  const bool lo_ok = certify(pr, res.a_lo, 1e-12) == Regime::decaying;
  const bool hi_ok = certify(pr, res.a_hi, 1e-12) == Regime::crossing;
  add(rep, tag(pr, "threshold endpoint certification"), lo_ok && hi_ok,
      (lo_ok ? 1.0 : 0.0) + (hi_ok ? 1.0 : 0.0), 2.0,
      "re-classified at step tolerance 1e-12");

  ThresholdOptions tight;
  tight.ctrl.rel_tol = 1e-12;
  const ThresholdResult res2 = find_threshold(pr, tight);
  const double shift = std::abs(res.a_star - res2.a_star);
  add(rep, tag(pr, "threshold stability"), shift <= 10.0 * tol, shift, 10.0 * tol,
      "a* at step tolerances 1e-10 vs 1e-12");
  a_star_out = res.a_star;
}

/// Integrates far enough that the tail product r^{(p-1)/(2-p)} f settles
/// past the drift gate of fit_tail.
ProfileTrajectory tail_profile(const Params& pr, double a) {
  const double r_max = std::clamp(suggested_tail_radius(pr, a), 2e4, 4e6);
  StepControl ctrl = default_profile_control();
  ctrl.abs_tol = 0.0;  // the tail spans many decades; absolute floors drown it
  ctrl.h_max = 3.0;
  ctrl.max_steps = 6000000;
  return integrate_profile(pr, a, r_max, ctrl);
}

void decaying_checks(ValidationReport& rep, const Params& pr, double a_star) {
  if (!(a_star > 0.0)) raise(Errc::not_converged, "threshold unavailable");
  double constants[2] = {kNaN, kNaN};
  double worst_gap = 0.0;
  double worst_backslide = -std::numeric_limits<double>::infinity();
  const double as[2] = {a_star / 4.0, a_star / 5.0};
  for (int k = 0; k < 2; ++k) {
    const ProfileTrajectory traj = tail_profile(pr, as[k]);
    ClassLabel label;
    label.regime = Regime::decaying;
    const auto fit = std::get<DecayingFit>(fit_tail(traj, label).fit);
    constants[k] = fit.constant_estimate;
    worst_gap = std::max(worst_gap, fit.relative_gap);
    // Eventual monotonicity of the product over the last decade of r.
    const double r_end = traj.path.back_time();
    double prev = -std::numeric_limits<double>::infinity();
    for (int j = 0; j <= 20; ++j) {
      const double r = 0.1 * r_end * std::pow(10.0, j / 20.0);
      const double prod = std::pow(r, pr.exp_slow) * traj.f(r);
      worst_backslide = std::max(worst_backslide, prev - prod);
      prev = prod;
    }
  }
  add(rep, tag(pr, "decaying tail product monotone"), worst_backslide <= 1e-9, worst_backslide,
      1e-9, "sampled over the last decade of r");
  add(rep, tag(pr, "decaying tail constant"), worst_gap <= 0.02, worst_gap, 0.02,
      "extrapolated limit vs s^s at a*/4 and a*/5");
  const double spread = std::abs(constants[0] - constants[1]) /
                        std::max(std::abs(constants[1]), 1e-300);
  add(rep, tag(pr, "decaying constant a-independence"), spread <= 0.02, spread, 0.02,
      "estimates at a*/4 and a*/5 agree");
}

void plateau_checks(ValidationReport& rep, const Params& pr, double a_star) {
  if (!(a_star > 0.0)) raise(Errc::not_converged, "threshold unavailable");
  StepControl ctrl = default_profile_control();
  ctrl.abs_tol = 0.0;  // f reaches exp(-r/(p-1)) scales well below any fixed floor
  const ProfileTrajectory traj = integrate_profile(pr, a_star, 40.0, ctrl);
  ClassLabel label;
  label.regime = Regime::critical;
  const auto fit = std::get<CriticalFit>(fit_tail(traj, label).fit);
  add(rep, tag(pr, "critical plateau flatness"), fit.plateau_variation < 0.10,
      fit.plateau_variation, 0.10,
      "exp(r/(p-1)) f over a window of length 5 in r");
  const double agree = std::abs(fit.plateau_value - fit.ell_star) /
                       std::max(fit.ell_star, 1e-300);
  add(rep, tag(pr, "critical constant two ways"), agree <= 0.05, agree, 0.05,
      "plateau level vs (p-1) I^{1/(p-1)}");
}

void selfsim_checks(ValidationReport& rep, const Params& pr) {
  const ProfileTrajectory traj = integrate_profile(pr, 1.0, 30.0);
  std::vector<double> xs;
  for (int i = -10; i <= 10; ++i) xs.push_back(0.5 * i);
  const SelfSimilarSlice s1 = reconstruct_selfsimilar(traj, 1.0, 0.25, xs);
  const SelfSimilarSlice s2 = reconstruct_selfsimilar(traj, 1.0, 0.75, xs);
  const double expected = std::pow((1.0 - 0.25) / (1.0 - 0.75), 1.0 / pr.two_mp);
  double worst = 0.0;
  bool even_ok = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (s2.u[i] > 0.0) {
      worst = std::max(worst, std::abs(s1.u[i] / s2.u[i] - expected) / expected);
    }
    even_ok = even_ok && s1.u[i] == s1.u[xs.size() - 1 - i];
  }
  const SelfSimilarSlice at_end = reconstruct_selfsimilar(traj, 1.0, 1.0, xs);
  bool zeros = true;
  for (const double u : at_end.u) zeros = zeros && u == 0.0;
  add(rep, tag(pr, "selfsimilar time scaling"), worst <= 1e-12, worst, 1e-12,
      "u(t1,x)/u(t2,x) vs ((T-t1)/(T-t2))^{1/(2-p)}");
  add(rep, tag(pr, "selfsimilar symmetry and extinction"), even_ok && zeros,
      (even_ok ? 1.0 : 0.0) + (zeros ? 1.0 : 0.0), 2.0,
      "u even in x; identically 0 at t = T");
}

void determinism_checks(ValidationReport& rep, const Params& pr) {
  const ProfileTrajectory t1 = integrate_profile(pr, 1.0, 30.0);
  const ProfileTrajectory t2 = integrate_profile(pr, 1.0, 30.0);
  bool same = t1.path.size() == t2.path.size();
  if (same) {
    for (std::size_t i = 0; i < t1.path.size(); ++i) {
      same = same && t1.path.time(i) == t2.path.time(i) &&
             t1.path.state(i, 0) == t2.path.state(i, 0) &&
             t1.path.state(i, 1) == t2.path.state(i, 1);
    }
  }
  add(rep, tag(pr, "repeat-run determinism"), same, same ? 0.0 : 1.0, 0.0,
      "two identical runs produce bitwise identical trajectories");
}

}  // namespace

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

ValidationReport run_validation(std::span<const double> ps) {
  ValidationReport rep;
  for (const double p : ps) {
    const Params pr = Params::make(p);
    guard(rep, tag(pr, "profile checks"), [&] { profile_checks(rep, pr); });
    guard(rep, tag(pr, "psi structure"), [&] { psi_structure_checks(rep, pr); });
    guard(rep, tag(pr, "psi barrier"), [&] { psi_barrier_checks(rep, pr); });
    guard(rep, tag(pr, "psi monotonicity"), [&] { monotonicity_checks(rep, pr); });
    guard(rep, tag(pr, "transform identity"), [&] { transform_checks(rep, pr); });
    guard(rep, tag(pr, "classifier grid"), [&] { classifier_grid_checks(rep, pr); });
    double a_star = kNaN;
    guard(rep, tag(pr, "threshold"), [&] { threshold_checks(rep, pr, a_star); });
    guard(rep, tag(pr, "decaying fit"), [&] { decaying_checks(rep, pr, a_star); });
    if (std::abs(p - 1.5) < 1e-12) {
      guard(rep, tag(pr, "critical plateau"), [&] { plateau_checks(rep, pr, a_star); });
      guard(rep, tag(pr, "selfsimilar"), [&] { selfsim_checks(rep, pr); });
      guard(rep, tag(pr, "determinism"), [&] { determinism_checks(rep, pr); });
    }
  }
  return rep;
}

ValidationReport run_validation() {
  const double kMatrix[] = {1.2, 1.5, 1.8};
  return run_validation(kMatrix);
}

}  // namespace extprof
