#pragma once

// Generalized p-trigonometric functions: pi_p, sin_p, cos_p and signed powers.
//
// sin_p is defined on [-pi_p/2, pi_p/2] as the inverse of
//     F(s) = \int_0^s (1 - |sigma|^p)^{-1/p} dsigma,
// extended by the reflection sin_p(t) = sin_p(pi_p - t) and 2*pi_p periodicity.
// cos_p = d/dt sin_p satisfies |sin_p|^p + |cos_p|^p = 1.
//
// Two evaluation paths are provided:
//   * stateless reference evaluation (series + safeguarded Newton), exact to
//     machine precision, used by the free functions sin_p / cos_p;
//   * PTrigTable, a per-exponent immutable acceleration structure (Hermite
//     interpolation away from the zeros of cos_p, series inversion near them)
//     for code that evaluates millions of times inside ODE right-hand sides.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pgap {

// Exponent p of the p-Laplacian; only p > 1 is meaningful.
class PExponent {
 public:
  explicit PExponent(double p) : p_(p) {
    if (!std::isfinite(p) || !(p > 1.0))
      throw std::invalid_argument("PExponent: p must be finite and > 1");
  }
  double value() const noexcept { return p_; }

 private:
  double p_;
};

// sign(x) * |x|^q for q > 0; odd and continuous in x.
inline double signed_pow(double x, double q) {
  if (!(q > 0.0))
    throw std::invalid_argument("signed_pow: exponent must be > 0");
  if (x == 0.0) return 0.0;
  return x < 0.0 ? -std::pow(-x, q) : std::pow(x, q);
}

// Half-period generator: pi_p = 2*pi / (p * sin(pi/p)).
inline double pi_p(PExponent p) {
  const double pv = p.value();
  return 2.0 * std::numbers::pi / (pv * std::sin(std::numbers::pi / pv));
}

struct SinCosP {
  double s;  // sin_p
  double c;  // cos_p
};

namespace ptrig_detail {

// F(s) = sum_k d_k s^{p k + 1} / (p k + 1), d_k the coefficients of
// (1-x)^{-1/p}. Geometric convergence for s^p bounded away from 1.
inline double arc_series(double s, double p) {
  if (s <= 0.0) return 0.0;
  const double m = std::pow(s, p);
  double dk = 1.0;   // d_0
  double mk = 1.0;   // m^k
  double sum = 0.0;
  for (int k = 0; k < 600; ++k) {
    const double term = dk * mk * s / (p * k + 1.0);
    sum += term;
    if (term < 1e-18 * sum) break;
    dk *= (1.0 / p + k) / (k + 1.0);
    mk *= m;
  }
  return sum;
}

// Distance to the quarter period expressed through c = cos_p:
//   gap(c) = pi_p/2 - t   where  c = cos_p(t), t in [0, pi_p/2].
// gap(c) = sum_k C_k c^{p(k+1)-1} / (p(k+1) - 1), C_k the coefficients of
// (1-v)^{1/p - 1}. Geometric convergence for c^p bounded away from 1.
inline double gap_series(double c, double p) {
  if (c <= 0.0) return 0.0;
  const double X = std::pow(c, p);
  const double cpm1 = std::pow(c, p - 1.0);
  double Ck = 1.0;
  double Xk = 1.0;
  double sum = 0.0;
  for (int k = 0; k < 600; ++k) {
    const double term = Ck * cpm1 * Xk / (p * (k + 1.0) - 1.0);
    sum += term;
    if (term < 1e-18 * sum) break;
    Ck *= (k + 1.0 - 1.0 / p) / (k + 1.0);
    Xk *= X;
  }
  return sum;
}

// Solve arc_series(s) = t on [0, s_hi] by Newton with bisection safeguard.
// arc_series is strictly increasing with derivative (1 - s^p)^{-1/p}.
inline double invert_arc(double t, double p, double s_hi) {
  if (t <= 0.0) return 0.0;
  double lo = 0.0, hi = s_hi;
  double s = std::min(t, s_hi);  // F(s) >= s, so the root is <= t
  for (int it = 0; it < 200; ++it) {
    const double f = arc_series(s, p) - t;
    if (f > 0.0) hi = s; else lo = s;
    const double df = std::pow(1.0 - std::pow(s, p), -1.0 / p);
    double step = f / df;
    double next = s - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-17 * std::max(1.0, std::abs(s))) { s = next; break; }
    s = next;
  }
  return s;
}

// Solve gap_series(c) = tau on (0, c_hi] by Newton with bisection safeguard.
// d gap / dc = c^{p-2} (1 - c^p)^{1/p - 1}.
inline double invert_gap(double tau, double p, double c_hi) {
  if (tau <= 0.0) return 0.0;
  double lo = 0.0, hi = c_hi;
  // leading-order inversion of gap(c) ~ c^{p-1}/(p-1)
  double c = std::pow((p - 1.0) * tau, 1.0 / (p - 1.0));
  c = std::clamp(c, 1e-300, c_hi);
  for (int it = 0; it < 200; ++it) {
    const double f = gap_series(c, p) - tau;
    if (f > 0.0) hi = c; else lo = c;
    const double df = std::pow(c, p - 2.0) * std::pow(1.0 - std::pow(c, p), 1.0 / p - 1.0);
    double next = c - f / df;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - c) <= 1e-17 * std::max(1.0, std::abs(c))) { c = next; break; }
    c = next;
  }
  return c;
}

// Reference evaluation on the fundamental quarter period [0, pi_p/2].
// Splits at |sin_p|^p = 1/2: below, invert the arc series in s; above,
// invert the gap series in c. Both sides keep the series ratio <= 1/2.
inline SinCosP quarter_eval(double t, double p, double quarter) {
  if (t <= 0.0) return {0.0, 1.0};
  if (t >= quarter) return {1.0, 0.0};
  const double s_split = std::pow(0.5, 1.0 / p);
  const double t_split = arc_series(s_split, p);
  if (t <= t_split) {
    const double s = invert_arc(t, p, s_split);
    return {s, std::pow(1.0 - std::pow(s, p), 1.0 / p)};
  }
  const double c = invert_gap(quarter - t, p, s_split);
  return {std::pow(1.0 - std::pow(c, p), 1.0 / p), c};
}

struct ReducedAngle {
  double t;      // in [0, pi_p/2]
  double ssign;  // sign applied to sin_p
  double csign;  // sign applied to cos_p
};

// Reduce modulo the period 2*pi_p into [-pi_p/2, 3*pi_p/2), then fold with
// sin_p(t) = sin_p(pi_p - t) and oddness onto the quarter period.
inline ReducedAngle reduce_angle(double t, double pip) {
  const double period = 2.0 * pip;
  double u = t - period * std::floor((t + 0.5 * pip) / period);
  double ssign = 1.0, csign = 1.0;
  if (u > 0.5 * pip) {
    u = pip - u;  // now in (-pi_p/2, pi_p/2]
    csign = -1.0;
  }
  if (u < 0.0) {
    u = -u;
    ssign = -1.0;
  }
  return {u, ssign, csign};
}

}  // namespace ptrig_detail

// Stateless full-range evaluation (reference path).
inline SinCosP sincos_p(double t, PExponent p) {
  const double pip = pi_p(p);
  const auto r = ptrig_detail::reduce_angle(t, pip);
  auto sc = ptrig_detail::quarter_eval(r.t, p.value(), 0.5 * pip);
  return {r.ssign * sc.s, r.csign * sc.c};
}

inline double sin_p(double t, PExponent p) { return sincos_p(t, p).s; }
inline double cos_p(double t, PExponent p) { return sincos_p(t, p).c; }

// Immutable per-exponent table. sin_p is stored at uniform nodes over
// [0, pi_p/2] together with its exact derivative cos_p, and evaluated by
// cubic Hermite interpolation. Near t = 0 and near the quarter period, where
// higher derivatives of sin_p are singular for fractional p, evaluation falls
// back to the fast-converging series inversions. cos_p is always recovered
// through (1 - |sin_p|^p)^{1/p}, so the p-trigonometric identity holds to
// roundoff by construction.
class PTrigTable {
 public:
  explicit PTrigTable(PExponent p, double tol = 1e-12)
      : p_(p.value()), pip_(pgap::pi_p(p)), quarter_(0.5 * pip_), tol_(tol) {
    // series regions: |sin_p| <= s_zero near t = 0, cos_p <= c_split near the
    // quarter period. For p > 2 the interpolant's fourth derivative grows
    // like c^{3(1-p)}, so the series region is widened there.
    s_zero_ = 0.15;
    t_zero_ = ptrig_detail::arc_series(s_zero_, p_);
    c_split_ = p_ > 2.0 ? 0.4 : 0.15;
    gap_split_ = ptrig_detail::gap_series(c_split_, p_);
    t_series_ = quarter_ - std::min(gap_split_, quarter_);

    std::size_t n = 1024;
    for (; n <= (1u << 17); n *= 2) {
      build(n);
      if (err_ <= 0.5 * tol) break;
    }
    if (err_ > tol)
      throw std::runtime_error("PTrigTable: tolerance not reached");
  }

  double p() const noexcept { return p_; }
  double pi_p() const noexcept { return pip_; }
  double quarter() const noexcept { return quarter_; }
  double tolerance() const noexcept { return tol_; }
  double interp_error_bound() const noexcept { return err_; }
  double coupling_max() const noexcept { return w_max_; }  // max |cos_p^{p-1} sin_p|
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return s_; }

  SinCosP sincos(double t) const {
    const auto r = ptrig_detail::reduce_angle(t, pip_);
    auto sc = quarter_sincos(r.t);
    return {r.ssign * sc.s, r.csign * sc.c};
  }
  double sin(double t) const { return sincos(t).s; }
  double cos(double t) const { return sincos(t).c; }

  // Everything the phase ODE needs from one angle:
  //   s = sin_p(phi), c = cos_p(phi),
  //   w = signed_pow(cos_p, p-1) * sin_p   (the coupling factor),
  //   cp = |cos_p|^p                        (the amplitude factor).
  struct PhaseParts {
    double s, c, w, cp;
  };
  PhaseParts phase_parts(double phi) const {
    const auto r = ptrig_detail::reduce_angle(phi, pip_);
    PhaseParts out;
    if (r.t >= t_series_) {
      // c is the primitive quantity near the quarter period
      const double c = ptrig_detail::invert_gap(quarter_ - r.t, p_, 1.000001 * c_split_);
      out.cp = std::pow(c, p_);
      out.s = r.ssign * std::pow(1.0 - out.cp, 1.0 / p_);
      out.c = r.csign * c;
      out.w = (c > 0.0 ? r.csign * out.cp / c : 0.0) * out.s;
    } else {
      const double s = r.t <= t_zero_
                           ? ptrig_detail::invert_arc(r.t, p_, 1.000001 * s_zero_)
                           : interp(r.t);
      const double m = std::pow(s, p_);  // |sin_p|^p
      const double cabs = std::pow(1.0 - m, 1.0 / p_);
      out.cp = 1.0 - m;
      out.s = r.ssign * s;
      out.c = r.csign * cabs;
      out.w = (cabs > 0.0 ? r.csign * out.cp / cabs : 0.0) * out.s;
    }
    return out;
  }

 private:
  void build(std::size_t n_cells) {
    const std::size_t n = n_cells + 1;
    nodes_.resize(n);
    s_.resize(n);
    c_.resize(n);
    dt_ = quarter_ / static_cast<double>(n_cells);
    for (std::size_t i = 0; i < n; ++i) {
      nodes_[i] = dt_ * static_cast<double>(i);
      auto sc = ptrig_detail::quarter_eval(nodes_[i], p_, quarter_);
      s_[i] = sc.s;
      c_[i] = sc.c;
    }
    s_.front() = 0.0;
    c_.front() = 1.0;
    s_.back() = 1.0;
    c_.back() = 0.0;
    w_max_ = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      w_max_ = std::max(w_max_, std::pow(c_[i], p_ - 1.0) * s_[i]);
    w_max_ *= 1.0 + 1e-6;  // nodal scan, padded to a true upper bound
    // measured interpolation error at cell midpoints of the table region
    err_ = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double tm = nodes_[i] + 0.5 * dt_;
      if (tm <= t_zero_) continue;
      if (tm >= t_series_) break;
      const double ref = ptrig_detail::quarter_eval(tm, p_, quarter_).s;
      err_ = std::max(err_, std::abs(interp(tm) - ref));
    }
  }

  // cubic Hermite on the cell containing t, with exact nodal derivatives
  double interp(double t) const {
    const double pos = t / dt_;
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= nodes_.size()) i = nodes_.size() - 2;
    const double th = pos - static_cast<double>(i);
    const double om = 1.0 - th;
    const double h00 = (1.0 + 2.0 * th) * om * om;
    const double h10 = th * om * om;
    const double h01 = th * th * (3.0 - 2.0 * th);
    const double h11 = th * th * (th - 1.0);
    return h00 * s_[i] + h10 * dt_ * c_[i] + h01 * s_[i + 1] + h11 * dt_ * c_[i + 1];
  }

  SinCosP quarter_sincos(double t) const {
    if (t <= 0.0) return {0.0, 1.0};
    if (t >= quarter_) return {1.0, 0.0};
    if (t >= t_series_) {
      const double c = ptrig_detail::invert_gap(quarter_ - t, p_, 1.000001 * c_split_);
      return {std::pow(1.0 - std::pow(c, p_), 1.0 / p_), c};
    }
    const double s =
        t <= t_zero_ ? ptrig_detail::invert_arc(t, p_, 1.000001 * s_zero_) : interp(t);
    return {s, std::pow(1.0 - std::pow(s, p_), 1.0 / p_)};
  }

  double p_, pip_, quarter_, tol_;
  double s_zero_ = 0.0, t_zero_ = 0.0;
  double c_split_, gap_split_, t_series_;
  double dt_ = 0.0, err_ = 0.0, w_max_ = 1.0;
  std::vector<double> nodes_, s_, c_;
};

}  // namespace pgap
