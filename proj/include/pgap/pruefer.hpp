#pragma once

// The phase equation of the Pruefer substitution
//     alpha*u = e * sin_p(phi),   u' = e * cos_p(phi),
// which decouples the weighted p-Laplacian eigenvalue ODE into
//     phi' = alpha + T(x)/(p-1) * signed_pow(cos_p(phi), p-1) * sin_p(phi),
//     (ln e)' = -T(x)/(p-1) * |cos_p(phi)|^p,
// with alpha = (lambda/(p-1))^{1/p} and T the log-derivative of the weight.
//
// Integration is by an adaptive Dormand-Prince 5(4) pair with cubic Hermite
// dense output. Reaching the phase levels +-pi_p/2 is detected as an event,
// located on the dense output and polished with fresh sub-steps.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgap/ptrig.hpp"

namespace pgap {

using LogDerivFn = std::function<double(double)>;

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double where)
      : std::runtime_error(what + " (x = " + std::to_string(where) + ")"),
        where_(where) {}
  double where() const noexcept { return where_; }

 private:
  double where_;
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double event_phi_tol = 1e-10;
  double h_max_frac = 1.0 / 32.0;  // of the leg span
  std::size_t max_steps = 4'000'000;
  bool record = true;  // keep accepted samples
  // optional certificate "the watched level cannot be reached from (x, phi)";
  // integration stops early (reported as no hit) when it returns true
  std::function<bool(double, double)> hit_impossible;
};

inline double alpha_of(double lambda, double p) {
  return std::pow(lambda / (p - 1.0), 1.0 / p);
}

// Right-hand side of the phase equation.
inline double phase_rhs(double x, double phi, const LogDerivFn& T_at,
                        const PTrigTable& trig, double lambda) {
  const double p = trig.p();
  const auto parts = trig.phase_parts(phi);
  return alpha_of(lambda, p) + T_at(x) * parts.w / (p - 1.0);
}

// Sampled solution of one integration leg, in increasing x order.
struct PrueferTrajectory {
  double p = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double seed_x = 0.0;
  double seed_phi = 0.0;
  std::vector<double> xs, phis, dphis;
  std::optional<double> a_hit;  // phi = -pi_p/2
  std::optional<double> b_hit;  // phi = +pi_p/2
  double a_hit_residual = 0.0;
  double b_hit_residual = 0.0;
  double min_rhs = std::numeric_limits<double>::infinity();  // smallest phase slope seen
  bool phase_decreased = false;  // phi was not monotone somewhere

  double front_x() const { return xs.front(); }
  double back_x() const { return xs.back(); }

  // dense evaluation by cubic Hermite on the recorded samples
  double phi_at(double x) const {
    if (xs.empty()) throw std::logic_error("PrueferTrajectory: empty");
    if (x <= xs.front()) return phis.front();
    if (x >= xs.back()) return phis.back();
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (xs[mid] <= x ? lo : hi) = mid;
    }
    const double h = xs[lo + 1] - xs[lo];
    const double th = (x - xs[lo]) / h;
    const double om = 1.0 - th;
    return (1.0 + 2.0 * th) * om * om * phis[lo] + th * om * om * h * dphis[lo] +
           th * th * (3.0 - 2.0 * th) * phis[lo + 1] +
           th * th * (th - 1.0) * h * dphis[lo + 1];
  }
};

namespace pruefer_detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                        e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640,
                        e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

// One embedded step for a small fixed-size state.
template <std::size_t Dim>
struct StepResult {
  std::array<double, Dim> y;
  std::array<double, Dim> f_end;  // FSAL stage
  double err;                     // scaled error estimate
};

template <std::size_t Dim, class Rhs>
StepResult<Dim> dp_step(const Rhs& rhs, double x,
                        const std::array<double, Dim>& y,
                        const std::array<double, Dim>& f1, double h,
                        double rtol, double atol) {
  std::array<double, Dim> k2, k3, k4, k5, k6, k7, yt, y5;
  auto stage = [&](double frac, auto&&... terms) {
    for (std::size_t i = 0; i < Dim; ++i) {
      double acc = 0.0;
      ((acc += terms.first * terms.second[i]), ...);
      yt[i] = y[i] + h * acc;
    }
    return rhs(x + frac * h, yt);
  };
  using P = std::pair<double, const std::array<double, Dim>&>;
  k2 = stage(c2, P{a21, f1});
  k3 = stage(c3, P{a31, f1}, P{a32, k2});
  k4 = stage(c4, P{a41, f1}, P{a42, k2}, P{a43, k3});
  k5 = stage(c5, P{a51, f1}, P{a52, k2}, P{a53, k3}, P{a54, k4});
  k6 = stage(1.0, P{a61, f1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5});
  for (std::size_t i = 0; i < Dim; ++i)
    y5[i] = y[i] + h * (b1 * f1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  k7 = rhs(x + h, y5);
  double err = 0.0;
  for (std::size_t i = 0; i < Dim; ++i) {
    const double ei = h * (e1 * f1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k7[i]);
    const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
    err = std::max(err, std::abs(ei) / sc);
  }
  return {y5, k7, err};
}

}  // namespace pruefer_detail

// Integrate the phase equation from (x0, phi0) toward x_limit
// (direction = +1 rightward, -1 leftward). Integration stops at the first
// crossing of the watched level, +pi_p/2 for rightward legs and -pi_p/2 for
// leftward legs, or at x_limit. Returned samples are in increasing x order.
inline PrueferTrajectory integrate_phase(const LogDerivFn& T_at,
                                         const PTrigTable& trig, double lambda,
                                         double x0, double phi0, int direction,
                                         double x_limit,
                                         const OdeOptions& opts = {}) {
  if (lambda < 0.0) throw std::invalid_argument("integrate_phase: lambda must be >= 0");
  const double p = trig.p();
  const double alpha = alpha_of(lambda, p);
  const double dir = direction >= 0 ? 1.0 : -1.0;
  const double span = (x_limit - x0) * dir;
  if (!(span > 0.0))
    throw std::invalid_argument("integrate_phase: x_limit is not ahead of x0");
  const double watch = dir * trig.quarter();

  double last_absT = 0.0, last_absc = 1.0;
  auto rhs = [&](double x, const std::array<double, 1>& y) -> std::array<double, 1> {
    const auto parts = trig.phase_parts(y[0]);
    const double T = T_at(x);
    if (!std::isfinite(T))
      throw SolverError("integrate_phase: non-finite log-derivative", x);
    last_absT = std::abs(T);
    last_absc = std::abs(parts.c);
    return {alpha + T * parts.w / (p - 1.0)};
  };

  PrueferTrajectory traj;
  traj.p = p;
  traj.lambda = lambda;
  traj.alpha = alpha;
  traj.seed_x = x0;
  traj.seed_phi = phi0;

  const double h_max = span * opts.h_max_frac;
  double x = x0;
  std::array<double, 1> y{phi0};
  std::array<double, 1> f = rhs(x, y);
  traj.min_rhs = f[0];

  std::vector<double>&xs = traj.xs, &phis = traj.phis, &dphis = traj.dphis;
  xs.push_back(x);
  phis.push_back(y[0]);
  dphis.push_back(f[0]);

  double h = std::min(h_max, span * 1e-3);
  double hit_x = 0.0, hit_residual = 0.0;
  bool hit = false;
  std::size_t consecutive_tiny = 0;

  for (std::size_t step = 0;; ++step) {
    if (step >= opts.max_steps)
      throw SolverError("integrate_phase: step budget exhausted", x);
    const double remaining = span - (x - x0) * dir;
    if (remaining <= 1e-15 * span) break;
    h = std::min(h, remaining);
    // stiffness guard for p < 2: the phase Jacobian scales like |T| |c|^{p-2}
    if (p < 2.0 && last_absT > 0.0) {
      const double cap = 2.5 * (p - 1.0) *
                         std::pow(std::max(last_absc, 1e-3), 2.0 - p) /
                         std::max(last_absT, 1e-300);
      h = std::min(h, std::max(cap, 1e-7 * span));
    }
    if (h < remaining &&
        h < 32.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), span)) {
      if (++consecutive_tiny > 64)
        throw SolverError("integrate_phase: step size underflow (h = " +
                              std::to_string(h) + ", phi = " + std::to_string(y[0]) +
                              ", T = " + std::to_string(T_at(x)) + ")",
                          x);
    } else {
      consecutive_tiny = 0;
    }

    const double hs = dir * h;
    auto res = pruefer_detail::dp_step<1>(rhs, x, y, f, hs, opts.rtol, opts.atol);
    if (!std::isfinite(res.err) || res.err > 1.0) {
      h *= std::isfinite(res.err) ? std::max(0.2, 0.9 * std::pow(res.err, -0.2)) : 0.2;
      continue;
    }
    const double x_new = x + hs;
    const double phi_new = res.y[0];
    const double f_new = res.f_end[0];
    traj.min_rhs = std::min(traj.min_rhs, f_new);
    if (f_new < 0.0) traj.phase_decreased = true;

    // event: crossing of the watched level within this step
    const double prev_gap = dir * (watch - y[0]);
    const double new_gap = dir * (watch - phi_new);
    if (prev_gap > 0.0 && new_gap <= 0.0) {
      const double pa = y[0], pb = phi_new;
      const double da = hs * f[0], db = hs * f_new;
      auto dense = [&](double th) {
        const double om = 1.0 - th;
        return (1.0 + 2.0 * th) * om * om * pa + th * om * om * da +
               th * th * (3.0 - 2.0 * th) * pb + th * th * (th - 1.0) * db;
      };
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dir * (watch - dense(mid)) > 0.0 ? lo : hi) = mid;
      }
      double xe = x + hs * 0.5 * (lo + hi);
      for (int polish = 0; polish < 3; ++polish) {
        const double hsub = xe - x;
        double phie = y[0];
        if (std::abs(hsub) > 1e-300)
          phie = pruefer_detail::dp_step<1>(rhs, x, y, f, hsub, opts.rtol, opts.atol).y[0];
        hit_residual = std::abs(phie - watch);
        if (hit_residual <= 0.25 * opts.event_phi_tol) break;
        const double fe = rhs(xe, {phie})[0];
        if (fe != 0.0) xe += (watch - phie) / fe;
        xe = std::clamp(xe, std::min(x, x_new), std::max(x, x_new));
      }
      hit_x = xe;
      hit = true;
      xs.push_back(hit_x);
      phis.push_back(watch);
      dphis.push_back(rhs(hit_x, {watch})[0]);
      break;
    }

    x = x_new;
    y = res.y;
    f = res.f_end;
    if (opts.record) {
      xs.push_back(x);
      phis.push_back(y[0]);
      dphis.push_back(f[0]);
    }
    h = std::min(h_max, h * std::clamp(0.9 * std::pow(std::max(res.err, 1e-10), -0.2), 0.2, 5.0));
    if (opts.hit_impossible && opts.hit_impossible(x, y[0])) break;
  }

  if (!opts.record && !hit) {  // keep the final state even when not recording
    xs.push_back(x);
    phis.push_back(y[0]);
    dphis.push_back(f[0]);
  }
  if (hit) {
    if (dir > 0) {
      traj.b_hit = hit_x;
      traj.b_hit_residual = hit_residual;
    } else {
      traj.a_hit = hit_x;
      traj.a_hit_residual = hit_residual;
    }
  }
  if (dir < 0) {  // report samples in increasing x order
    std::reverse(xs.begin(), xs.end());
    std::reverse(phis.begin(), phis.end());
    std::reverse(dphis.begin(), dphis.end());
  }
  return traj;
}

// Integrate across interior breakpoints of T (jump discontinuities): the leg
// is split so every sub-integration sees a smooth right-hand side.
inline PrueferTrajectory integrate_phase_split(
    const LogDerivFn& T_at, const PTrigTable& trig, double lambda, double x0,
    double phi0, int direction, double x_limit,
    const std::vector<double>& breakpoints, const OdeOptions& opts = {}) {
  const double dir = direction >= 0 ? 1.0 : -1.0;
  const double tol_x = 1e-13 * std::abs(x_limit - x0);
  std::vector<double> cuts;
  for (double b : breakpoints)
    if ((b - x0) * dir > tol_x && (x_limit - b) * dir > tol_x) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  if (dir < 0) std::reverse(cuts.begin(), cuts.end());
  cuts.push_back(x_limit);

  PrueferTrajectory full;
  double x = x0, phi = phi0;
  bool first = true;
  for (double stop : cuts) {
    PrueferTrajectory leg =
        integrate_phase(T_at, trig, lambda, x, phi, direction, stop, opts);
    const bool hit = leg.a_hit.has_value() || leg.b_hit.has_value();
    if (first) {
      full = leg;
      first = false;
    } else {
      // splice, dropping the duplicated joint sample
      if (direction >= 0) {
        full.xs.insert(full.xs.end(), leg.xs.begin() + 1, leg.xs.end());
        full.phis.insert(full.phis.end(), leg.phis.begin() + 1, leg.phis.end());
        full.dphis.insert(full.dphis.end(), leg.dphis.begin() + 1, leg.dphis.end());
      } else {
        full.xs.insert(full.xs.begin(), leg.xs.begin(), leg.xs.end() - 1);
        full.phis.insert(full.phis.begin(), leg.phis.begin(), leg.phis.end() - 1);
        full.dphis.insert(full.dphis.begin(), leg.dphis.begin(), leg.dphis.end() - 1);
      }
      full.min_rhs = std::min(full.min_rhs, leg.min_rhs);
      full.phase_decreased = full.phase_decreased || leg.phase_decreased;
      if (leg.a_hit) { full.a_hit = leg.a_hit; full.a_hit_residual = leg.a_hit_residual; }
      if (leg.b_hit) { full.b_hit = leg.b_hit; full.b_hit_residual = leg.b_hit_residual; }
    }
    if (hit) break;
    if (direction >= 0) {
      x = full.xs.back();
      phi = full.phis.back();
    } else {
      x = full.xs.front();
      phi = full.phis.front();
    }
    if (opts.hit_impossible && opts.hit_impossible(x, phi)) break;
  }
  full.seed_x = x0;
  full.seed_phi = phi0;
  return full;
}

// Reconstructed eigenfunction u (and u') on [a_hit, b_hit], normalized so
// that the amplitude satisfies e = 1 at mid = D/2 (or at the seed when the
// trajectory does not straddle mid).
struct EigenfunctionSample {
  std::vector<double> xs, phi, u, uprime, log_e;
};

inline EigenfunctionSample reconstruct_eigenfunction(
    const PrueferTrajectory& traj, const LogDerivFn& T_at, const PTrigTable& trig,
    double normalize_at, const std::vector<double>& breakpoints,
    std::size_t n_samples = 2049, const OdeOptions& opts_in = {}) {
  if (!traj.a_hit || !traj.b_hit)
    throw std::invalid_argument("reconstruct_eigenfunction: trajectory lacks hits");
  const double p = trig.p();
  const double a = *traj.a_hit, b = *traj.b_hit;
  const double alpha = traj.alpha;

  auto rhs2 = [&](double x, const std::array<double, 2>& y) -> std::array<double, 2> {
    const auto parts = trig.phase_parts(y[0]);
    const double T = T_at(x);
    return {alpha + T * parts.w / (p - 1.0), -T * parts.cp / (p - 1.0)};
  };

  OdeOptions opts = opts_in;

  // integrate (phi, ln e) over one leg, sampling on the way
  struct Samples {
    std::vector<double> xs, phi, loge, dphi, dloge;
  };
  auto run_leg = [&](double x0, double phi0, double loge0, double x_limit,
                     int direction) {
    Samples out;
    const double dir = direction >= 0 ? 1.0 : -1.0;
    const double tol_x = 1e-13 * (std::abs(x_limit - x0) + 1e-300);
    std::vector<double> cuts;
    for (double c : breakpoints)
      if ((c - x0) * dir > tol_x && (x_limit - c) * dir > tol_x) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    if (dir < 0) std::reverse(cuts.begin(), cuts.end());
    cuts.push_back(x_limit);

    double x = x0;
    std::array<double, 2> y{phi0, loge0};
    std::array<double, 2> f = rhs2(x, y);
    out.xs.push_back(x);
    out.phi.push_back(y[0]);
    out.loge.push_back(y[1]);
    out.dphi.push_back(f[0]);
    out.dloge.push_back(f[1]);
    const double leg_span = std::abs(x_limit - x0);
    for (double stop : cuts) {
      const double span = (stop - x) * dir;
      if (!(span > 0.0)) continue;
      const double h_max = std::max(span, 1e-30) * opts.h_max_frac;
      double h = std::min(h_max, span * 1e-3);
      for (std::size_t step = 0; step < opts.max_steps; ++step) {
        const double remaining = (stop - x) * dir;
        if (remaining <= 1e-15 * leg_span) break;
        h = std::min(h, remaining);
        auto res = pruefer_detail::dp_step<2>(rhs2, x, y, f, dir * h, opts.rtol, opts.atol);
        if (!std::isfinite(res.err) || res.err > 1.0) {
          h *= std::isfinite(res.err) ? std::max(0.2, 0.9 * std::pow(res.err, -0.2)) : 0.2;
          continue;
        }
        x += dir * h;
        y = res.y;
        f = res.f_end;
        out.xs.push_back(x);
        out.phi.push_back(y[0]);
        out.loge.push_back(y[1]);
        out.dphi.push_back(f[0]);
        out.dloge.push_back(f[1]);
        h = std::min(h_max, h * std::clamp(0.9 * std::pow(std::max(res.err, 1e-10), -0.2), 0.2, 5.0));
      }
    }
    return out;
  };

  const double seed_x = std::clamp(traj.seed_x, a, b);
  Samples right = run_leg(seed_x, traj.seed_phi, 0.0, b, +1);
  Samples left = run_leg(seed_x, traj.seed_phi, 0.0, a, -1);

  // merge into increasing-x samples
  Samples all;
  for (std::size_t i = left.xs.size(); i-- > 1;) {
    all.xs.push_back(left.xs[i]);
    all.phi.push_back(left.phi[i]);
    all.loge.push_back(left.loge[i]);
    all.dphi.push_back(left.dphi[i]);
    all.dloge.push_back(left.dloge[i]);
  }
  for (std::size_t i = 0; i < right.xs.size(); ++i) {
    all.xs.push_back(right.xs[i]);
    all.phi.push_back(right.phi[i]);
    all.loge.push_back(right.loge[i]);
    all.dphi.push_back(right.dphi[i]);
    all.dloge.push_back(right.dloge[i]);
  }

  auto hermite = [](double xq, const std::vector<double>& xs,
                    const std::vector<double>& ys, const std::vector<double>& ds) {
    if (xq <= xs.front()) return ys.front();
    if (xq >= xs.back()) return ys.back();
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (xs[mid] <= xq ? lo : hi) = mid;
    }
    const double h = xs[lo + 1] - xs[lo];
    const double th = (xq - xs[lo]) / h;
    const double om = 1.0 - th;
    return (1.0 + 2.0 * th) * om * om * ys[lo] + th * om * om * h * ds[lo] +
           th * th * (3.0 - 2.0 * th) * ys[lo + 1] + th * th * (th - 1.0) * h * ds[lo + 1];
  };

  const double loge_ref = hermite(std::clamp(normalize_at, a, b), all.xs, all.loge, all.dloge);

  EigenfunctionSample out;
  out.xs.resize(n_samples);
  out.phi.resize(n_samples);
  out.u.resize(n_samples);
  out.uprime.resize(n_samples);
  out.log_e.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double xq = a + (b - a) * static_cast<double>(i) / (n_samples - 1);
    const double phi = hermite(xq, all.xs, all.phi, all.dphi);
    const double loge = hermite(xq, all.xs, all.loge, all.dloge) - loge_ref;
    const auto sc = trig.sincos(phi);
    out.xs[i] = xq;
    out.phi[i] = phi;
    out.log_e[i] = loge;
    out.u[i] = std::exp(loge) * sc.s / alpha;
    out.uprime[i] = std::exp(loge) * sc.c;
  }
  return out;
}

}  // namespace pgap
