#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace extprof {

/// Adaptive Simpson quadrature of f over [a, b]. `tol` is an absolute
/// tolerance on the result; depth guards against non-integrable inputs.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40) {
  if (!(b >= a)) throw std::invalid_argument("adaptive_simpson: reversed interval");
  struct Impl {
    F& f;
    int max_depth;
    double recurse(double a, double m, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      // The negated comparison also stops on a NaN delta (non-finite
      // integrand); recursing on NaN would always reach max_depth.
      if (depth >= max_depth || !(std::abs(delta) > 15.0 * tol)) {
        return left + right + delta / 15.0;
      }
      return recurse(a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
             recurse(m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
  };
  if (a == b) return 0.0;
  Impl impl{f, max_depth};
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return impl.recurse(a, m, b, fa, fm, fb, whole, tol, 0);
}

}  // namespace extprof
