#pragma once

#include <cmath>
#include <stdexcept>

namespace extprof {

/// Model constants for one diffusion exponent p in (1, 2). All derived
/// quantities are recomputed from p by make(); nothing here is cached or
/// mutated after construction.
struct Params {
  double p;

  double kappa;       ///< (p-1)^{-p}, the critical plateau level of phi
  double exp_fast;    ///< 1/(p-1), exponential decay rate of the critical profile
  /// Algebraic decay exponent of subcritical profiles: f ~ slow_const r^{-exp_slow}.
  /// Equals (p-1)/(2-p): the balance f = |f'|^{p-1} forces f' = -f^{1/(p-1)},
  /// whose solutions are f = ((2-p)/(p-1) r)^{-(p-1)/(2-p)} up to translation.
  double exp_slow;
  double slow_const;  ///< ((p-1)/(2-p))^{(p-1)/(2-p)}, the a-independent algebraic tail constant
  double c_lower;     ///< (p-1)^{(p-1)/(2-p)} p^{-p/(2-p)}; shooting heights <= c_lower never cross

  // Frequently used exponent combinations.
  double pm1;        ///< p - 1
  double two_mp;     ///< 2 - p
  double q;          ///< p/(p-1)
  double pm1_op;     ///< (p-1)/p

  /// Builds the constant set, rejecting p outside [1 + guard, 2 - guard].
  /// The guard band keeps every derived exponent representable and the
  /// integrations well-scaled; degrade-and-continue is not an option here.
  static Params make(double p, double guard = 1e-3);
};

inline Params Params::make(double p, double guard) {
  if (!(guard > 0.0) || !(p >= 1.0 + guard) || !(p <= 2.0 - guard)) {
    throw std::invalid_argument("Params::make: p must lie in [1+guard, 2-guard]");
  }
  Params out;
  out.p = p;
  out.pm1 = p - 1.0;
  out.two_mp = 2.0 - p;
  out.q = p / out.pm1;
  out.pm1_op = out.pm1 / p;
  out.kappa = std::pow(out.pm1, -p);
  out.exp_fast = 1.0 / out.pm1;
  out.exp_slow = out.pm1 / out.two_mp;
  out.slow_const = std::pow(out.exp_slow, out.exp_slow);
  out.c_lower = std::pow(out.pm1, out.pm1 / out.two_mp) * std::pow(p, -p / out.two_mp);
  return out;
}

}  // namespace extprof
