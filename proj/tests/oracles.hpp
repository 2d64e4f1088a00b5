#pragma once

// Test-only reference computations, kept independent of the library's
// evaluation paths: adaptive Simpson quadrature for the defining integral of
// sin_p (under the substitution that removes the endpoint singularity) and
// bisection for its inverse. The library inverts power series instead, so
// agreement here is a genuine cross-check.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace testor {

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-13) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// F(s) = int_0^s (1 - t^p)^{-1/p} dt, with t = 1 - v^{p/(p-1)} so the
// integrand is bounded up to s = 1.
inline double sinp_arc_quadrature(double s, double p) {
  if (s <= 0.0) return 0.0;
  const double q = p / (p - 1.0);
  const double v_lo = std::pow(1.0 - s, 1.0 / q);  // t = s
  auto g = [p, q](double v) {
    const double t = 1.0 - std::pow(v, q);
    const double core = std::pow(1.0 - std::pow(t, p), -1.0 / p);
    return core * q * std::pow(v, q - 1.0);
  };
  return adaptive_simpson(g, v_lo, 1.0);
}

inline double pi_p_quadrature(double p) { return 2.0 * sinp_arc_quadrature(1.0, p); }

// invert F by bisection on [0, 1]
inline double sinp_quadrature(double t, double p) {
  if (t <= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sinp_arc_quadrature(mid, p) < t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace testor
