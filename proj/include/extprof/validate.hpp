#pragma once

// Structural self-checks over the built-in exponent matrix. Each check pins
// one property the solvers must exhibit (residual sizes, shape and ordering
// of psi, envelope and barrier bounds, classifier consistency, threshold
// certification, tail constants, self-similar scaling, determinism) and
// records the measured value next to its threshold so a failing table reads
// as a diagnosis, not a boolean.

#include <span>
#include <string>
#include <vector>

namespace extprof {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< measured quantity
  double threshold = 0.0;  ///< bound it was held against
  std::string detail;      ///< context or error text
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

/// Runs every check for each exponent in `ps`. Solver errors inside a check
/// group are caught and recorded as failures; the suite always runs to the
/// end of the matrix.
ValidationReport run_validation(std::span<const double> ps);

/// Default matrix p in {1.2, 1.5, 1.8}.
ValidationReport run_validation();

}  // namespace extprof
