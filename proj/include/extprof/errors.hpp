#pragma once

#include <stdexcept>
#include <string>

namespace extprof {

/// Failure categories surfaced by the solver layers. Terminal integrator
/// outcomes that a caller may legitimately observe (event hit, reaching the
/// end of the span) are not errors; everything here signals that a requested
/// result could not be produced.
enum class Errc {
  step_underflow,
  max_steps_exceeded,
  non_finite_rhs,
  out_of_span,
  too_few_nodes,
  invariant_violation,
  shape_violation,
  insufficient_range,
  range_mismatch,
  mismatched_params,
  not_converged,
  wrong_label,
  bracket_failure,
  inconsistent_classification,
  non_finite_payload,
  io_failure,
};

const char* to_string(Errc code) noexcept;

class SolverError : public std::runtime_error {
 public:
  SolverError(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& what);

}  // namespace extprof
