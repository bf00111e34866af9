// Trichotomy of shooting parameters and the critical threshold.
//
// In the transform plane the quotient phi(y) = psi(y)(1-y)^{-p} decides the
// fate of a trajectory against kappa = (p-1)^{-p}: clearing kappa means the
// profile crosses zero, a vanishing phi' means it decays to zero at infinity,
// and the threshold trajectory runs phi -> kappa. The classifier drives a
// psi run with two terminal events, a rising crossing detector at
// kappa (1 + margin) (1-y)^p and a falling phi-slope detector, and reads the
// verdict off whichever fires first. Verdicts within the margin band around
// kappa are reported as critical: indistinguishable from the threshold at
// the working precision.

#pragma once

#include <cstddef>
#include <vector>

#include "extprof/psi.hpp"

namespace extprof {

enum class Regime {
  crossing,  // f reaches zero at finite radius
  critical,  // within margin of the threshold, not separable
  decaying,  // f stays positive and decays
};

const char* to_string(Regime regime);

struct ClassifyOptions {
  /// Relative half-width of the indistinguishable band around kappa.
  double margin = 1e-4;
  double y_end = 1.0 - 1e-6;
  StepControl ctrl = default_psi_control();
  /// Tail resolution floor, forwarded to the transformed integrator:
  /// 0 budget-derived, negative disabled, positive used as given.
  double psi_floor = 0.0;
};

struct ClassEvidence {
  /// phi at the deciding location (event point or last node).
  double phi_at_decision = 0.0;
  double y_decided = 0.0;
  double margin_used = 0.0;
  /// Verdict came from a terminal event rather than endpoint inspection.
  bool via_event = false;
  bool hit_floor = false;
  /// For decaying verdicts: descent re-checked over a trailing window of
  /// width 0.1 (1 - y_peak) past the detected phi peak.
  bool peak_confirmed = false;
  std::size_t nodes = 0;
};

struct ClassLabel {
  Regime regime = Regime::critical;
  ClassEvidence evidence;
};

/// Classifies the trajectory with initial height a. A phi peak strictly
/// below the band is confirmed by a short descent window before the
/// decaying verdict is issued; grazing peaks and runs that reach y_end
/// undecided come back critical.
ClassLabel classify(const Params& params, double a, const ClassifyOptions& opts = {});

/// Every a above this value is a crossing parameter (explicit barrier
/// constant), so doubling searches can stop near it.
double crossing_seed(const Params& params);

struct Bracket {
  double a_lo;  // certified decaying
  double a_hi;  // certified crossing
};

/// Starts from the decaying barrier a = c_lower and doubles until a
/// certified crossing shows up. Errc::bracket_failure if either end
/// refuses to certify (the cap is 4x the crossing seed).
Bracket initial_bracket(const Params& params, const ClassifyOptions& opts = {});

struct ThresholdOptions {
  /// Bracket width to certify; 0 picks 1e-10 * max(1, a_hi).
  double tol_a = 0.0;
  double margin = 1e-4;
  double y_end = 1.0 - 1e-6;
  StepControl ctrl = default_psi_control();
  std::size_t max_iterations = 200;
};

struct ProbeRecord {
  double a_lo, a_hi;  // bracket before the probe
  double a_probe;
  Regime verdict;
  double margin;    // margin in force for this probe
  double rel_tol;   // step tolerance in force
};

struct ThresholdResult {
  double a_star;  // bracket midpoint
  double a_lo;    // final certified decaying end
  double a_hi;    // final certified crossing end
  double width;
  std::size_t iterations;
  std::vector<ProbeRecord> log;
};

/// Bisects the bracket from initial_bracket down to tol_a. The working
/// margin shrinks with the bracket (max(1e-8, width/a_hi), capped by
/// opts.margin). A critical verdict at the probe triggers a retry ladder
/// that tightens margin and tolerance and shifts the probe off midpoint,
/// so an indistinguishable point cannot stall the bracket; if the ladder
/// is exhausted the search gives up with Errc::not_converged. A decaying
/// verdict above a crossing verdict is Errc::inconsistent_classification.
ThresholdResult find_threshold(const Params& params, const ThresholdOptions& opts = {});

}  // namespace extprof
