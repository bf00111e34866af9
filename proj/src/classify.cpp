#include "extprof/classify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace extprof {
namespace {

inline double clamped_pow(double psi, double e) {
  return std::pow(std::max(psi, 0.0), e);
}

// phi' up to the positive factor (1-y)^{-p-1}: psi'(y)(1-y) + p psi.
struct PhiSlopeProxy {
  double q, pm1_op, a2mp, p;
  double operator()(double y, std::span<const double> psi) const {
    const double s = 1.0 - y;
    return q * (a2mp * s - clamped_pow(psi[0], pm1_op)) * s + p * psi[0];
  }
};

// Re-integrates a short window past a detected phi peak and checks that phi
// actually comes down. Guards the decaying verdict against event jitter on
// a flat slope. Falling through the resolution floor counts as descent.
bool descent_confirmed(const Params& params, double a, double y_peak, double psi_peak,
                       const ClassifyOptions& opts) {
  const double w_end = std::min(y_peak + 0.1 * (1.0 - y_peak), opts.y_end);
  if (!(w_end > y_peak)) return false;

  const double q = params.q, pm1_op = params.pm1_op;
  const double a2mp = std::pow(a, params.two_mp);
  auto rhs = [q, pm1_op, a2mp](double y, std::span<const double> psi, std::span<double> d) {
    d[0] = q * (a2mp * (1.0 - y) - clamped_pow(psi[0], pm1_op));
  };
  auto clamp_state = [](double, std::span<double> psi) {
    if (psi[0] < 0.0) psi[0] = 0.0;
  };
  const double floor = auto_psi_floor(params, a);
  EventSpec floor_ev;
  floor_ev.event_fn = [floor](double, std::span<const double> psi) { return psi[0] - floor; };
  floor_ev.direction = EventDirection::falling;

  try {
    const Trajectory win =
        integrate_adaptive(rhs, y_peak, std::span<const double>(&psi_peak, 1), w_end,
                           opts.ctrl, std::span<const EventSpec>(&floor_ev, 1), clamp_state);
    if (win.stop_reason() == StopReason::event_hit) return true;
    if (win.stop_reason() != StopReason::reached_end) return false;

    const double phi_pk = psi_peak * std::pow(1.0 - y_peak, -params.p);
    const double phi_w = win.back_state()[0] * std::pow(1.0 - win.back_time(), -params.p);
    return phi_w < phi_pk * (1.0 - 100.0 * opts.ctrl.rel_tol);
  } catch (const SolverError&) {
    return false;
  }
}

}  // namespace

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::crossing: return "Crossing";
    case Regime::critical: return "Critical";
    case Regime::decaying: return "Decaying";
  }
  return "unknown";
}

ClassLabel classify(const Params& params, double a, const ClassifyOptions& opts) {
  if (!(a > 0.0)) throw std::invalid_argument("classify: a must be positive");
  if (!(opts.margin > 0.0 && opts.margin < 1.0)) {
    throw std::invalid_argument("classify: margin outside (0,1)");
  }
  const double kappa = params.kappa;
  const double m = opts.margin;

  PsiOptions po;
  po.y_end = opts.y_end;
  po.ctrl = opts.ctrl;
  po.psi_floor = opts.psi_floor;

  EventSpec cross;
  const double p = params.p;
  const double lift = kappa * (1.0 + m);
  cross.event_fn = [lift, p](double y, std::span<const double> psi) {
    return psi[0] - lift * std::pow(1.0 - y, p);
  };
  cross.direction = EventDirection::rising;

  EventSpec phi_peak;
  phi_peak.event_fn = PhiSlopeProxy{params.q, params.pm1_op, std::pow(a, params.two_mp), p};
  phi_peak.direction = EventDirection::falling;

  po.extra_events = {cross, phi_peak};
  const PsiTrajectory tr = integrate_psi(params, a, po);

  ClassLabel out;
  out.evidence.margin_used = m;
  out.evidence.hit_floor = tr.hit_floor;
  out.evidence.nodes = tr.path.size();

  if (tr.extra_hit) {
    const double y_hit = tr.extra_hit->t;
    out.evidence.via_event = true;
    out.evidence.y_decided = y_hit;
    out.evidence.phi_at_decision = tr.phi_at(y_hit);
    if (tr.extra_hit->event_index == 0) {
      out.regime = Regime::crossing;
      return out;
    }
    // phi peak. Below the band it is a decaying verdict, pending descent
    // confirmation; inside the band it is not separable from critical.
    if (out.evidence.phi_at_decision >= kappa * (1.0 - m)) {
      out.regime = Regime::critical;
      return out;
    }
    const double psi_hit = tr.path.back_state()[0];
    out.evidence.peak_confirmed = descent_confirmed(params, a, y_hit, psi_hit, opts);
    out.regime = out.evidence.peak_confirmed ? Regime::decaying : Regime::critical;
    return out;
  }

  const double y_last = tr.y_end();
  out.evidence.y_decided = y_last;
  out.evidence.phi_at_decision = tr.phi_at(y_last);
  if (tr.hit_floor) {
    // Tail fell below the resolvable scale before any event: the whole
    // trajectory sits far under the envelope.
    out.regime = out.evidence.phi_at_decision < kappa * (1.0 - m) ? Regime::decaying
                                                                  : Regime::critical;
    out.evidence.peak_confirmed = out.regime == Regime::decaying;
    return out;
  }
  out.regime = Regime::critical;
  return out;
}

double crossing_seed(const Params& params) {
  const double p = params.p;
  const double num = params.kappa * (1.0 + p * std::log(2.0)) * params.pm1 * params.two_mp;
  const double den = p * (1.0 - std::pow(2.0, p - 2.0));
  return std::pow(num / den, 1.0 / params.two_mp);
}

Bracket initial_bracket(const Params& params, const ClassifyOptions& opts) {
  double a_lo = params.c_lower;
  const ClassLabel lo = classify(params, a_lo, opts);
  if (lo.regime != Regime::decaying) {
    raise(Errc::bracket_failure,
          "barrier value a=" + std::to_string(a_lo) + " did not certify as decaying");
  }
  const double cap = 4.0 * std::max(crossing_seed(params), a_lo);
  double a_hi = a_lo;
  while (true) {
    a_hi *= 2.0;
    if (a_hi > cap) {
      raise(Errc::bracket_failure, "no crossing parameter found below the doubling cap");
    }
    const ClassLabel hi = classify(params, a_hi, opts);
    if (hi.regime == Regime::crossing) break;
    if (hi.regime == Regime::decaying) a_lo = a_hi;
    // A critical verdict moves neither end; the next doubling clears it.
  }
  return {a_lo, a_hi};
}

ThresholdResult find_threshold(const Params& params, const ThresholdOptions& opts) {
  ClassifyOptions base;
  base.margin = opts.margin;
  base.y_end = opts.y_end;
  base.ctrl = opts.ctrl;

  Bracket br = initial_bracket(params, base);
  double a_lo = br.a_lo;
  double a_hi = br.a_hi;
  // The default target is anchored to the current upper end, so the final
  // width satisfies the bound against the bracket actually returned.
  const auto tol = [&opts, &a_hi] {
    return opts.tol_a > 0.0 ? opts.tol_a : 1e-10 * std::max(1.0, a_hi);
  };

  double max_decay = a_lo;
  double min_cross = a_hi;
  ThresholdResult res;
  res.iterations = 0;

  // The probe ladder: fractions keep the bracket shrinking even when the
  // midpoint itself is indistinguishable, while margin and tolerance
  // tighten to pry the verdict loose.
  constexpr double kFrac[4] = {0.5, 0.375, 0.625, 0.53125};

  while (a_hi - a_lo > tol()) {
    if (++res.iterations > opts.max_iterations) {
      raise(Errc::not_converged, "threshold bisection exceeded max_iterations");
    }
    const double width = a_hi - a_lo;
    bool moved = false;
    double margin = std::min(opts.margin, std::max(1e-8, width / a_hi));
    double rel = opts.ctrl.rel_tol;
    // Trajectories separate from the critical one only near y = 1: the
    // decision depth shrinks with the bracket, so each retry also pushes
    // y_end two decades closer to 1.
    double depth = 1.0 - base.y_end;
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double probe = a_lo + kFrac[attempt] * width;
      if (probe <= a_lo || probe >= a_hi) continue;
      ClassifyOptions co = base;
      co.margin = margin;
      co.ctrl.rel_tol = rel;
      co.y_end = 1.0 - depth;
      // Past the first attempt the run must reach depths where the budget
      // floor would cut it short; near the critical curve psi stays well
      // conditioned, so the floor is safe to drop.
      if (attempt > 0) co.psi_floor = -1.0;
      const ClassLabel v = classify(params, probe, co);
      res.log.push_back({a_lo, a_hi, probe, v.regime, margin, rel});
      if (v.regime == Regime::crossing) {
        a_hi = probe;
        min_cross = std::min(min_cross, probe);
        moved = true;
        break;
      }
      if (v.regime == Regime::decaying) {
        a_lo = probe;
        max_decay = std::max(max_decay, probe);
        moved = true;
        break;
      }
      margin = std::max(margin / 8.0, 1e-12);
      rel = std::max(rel / 10.0, 1e-13);
      depth = std::max(depth / 100.0, 1e-13);
    }
    if (!moved) {
      raise(Errc::not_converged,
            "probe ladder exhausted near a=" + std::to_string(0.5 * (a_lo + a_hi)));
    }
  }

  if (max_decay > min_cross) {
    raise(Errc::inconsistent_classification,
          "decaying verdict at a=" + std::to_string(max_decay) +
              " above crossing verdict at a=" + std::to_string(min_cross));
  }

  res.a_lo = a_lo;
  res.a_hi = a_hi;
  res.a_star = 0.5 * (a_lo + a_hi);
  res.width = a_hi - a_lo;
  return res;
}

}  // namespace extprof
