#pragma once

// Eigenvalue solvers built on the phase equation. The minimal lambda for
// which the phase trajectory connects -pi_p/2 to +pi_p/2 across [0, D] is
// located by bracketing and bisection in lambda, using that the first
// hitting point of the far phase level is monotone in lambda.
//
//   lambda_hat:        the glued model log-derivative, seeded at (D/2, 0)
//   lambda_of_density: an arbitrary admissible density, seeded at (~0, -pi_p/2)
//   lambda_sharp:      lambda_hat for K <= 0; for K > 0 the infimum of
//                      lambda_hat over sub-diameters D' <= min(D, D_{K,N})

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgap/density.hpp"
#include "pgap/geometry.hpp"
#include "pgap/pruefer.hpp"
#include "pgap/ptrig.hpp"

namespace pgap {

enum class GapMethod { shooting, infimum_scan };

inline const char* to_string(GapMethod m) {
  return m == GapMethod::shooting ? "shooting" : "infimum-scan";
}

struct GapDiagnostics {
  double g_at_lo = 0.0;        // boundary mismatch at the bracket ends
  double g_at_hi = 0.0;
  double hit_residual = 0.0;   // |phi(b_hit) - pi_p/2| at the reported lambda
  double endpoint_gap_a = 0.0; // a_hit distance from 0
  double endpoint_gap_b = 0.0; // b_hit distance from D
  int g_evaluations = 0;
};

struct GapResult {
  double lambda = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  int iterations = 0;
  GapMethod method = GapMethod::shooting;
  PrueferTrajectory trajectory;
  std::optional<double> minimizing_Dprime;
  GapDiagnostics diag;
};

namespace gap_detail {

// int_x^L max(cot_{K,N,D}, 0), the positive part of the class upper envelope
// of admissible log-derivatives, in closed form.
inline std::function<double(double)> pos_cot_integral(double K, double N, double L) {
  const double kap = K / (N - 1.0);
  double cap = L;
  if (K > 0.0) cap = std::min(L, 0.5 * diameter_bound(K, N));
  return [=](double x) {
    const double hi = cap, lo = std::min(x, cap);
    if (!(hi > lo)) return 0.0;
    const double slo = s_kappa_clamped(lo, kap);
    if (slo <= 0.0) return kInf;
    return (N - 1.0) * (std::log(s_kappa_clamped(hi, kap)) - std::log(slo));
  };
}

struct ShootSpec {
  LogDerivFn T_at;
  double D = 0.0;
  std::vector<double> breakpoints;
  double seed_x = 0.0;
  double seed_phi = 0.0;
  double x_hi_limit = 0.0;
  bool two_sided = false;   // integrate a left leg for the final trajectory
  double x_lo_limit = 0.0;
  // int_x^{x_hi_limit} max(T_upper, 0) for a known upper envelope of T
  // (the admissible class gives T <= cot_{K,N,D}); enables early no-hit
  // certificates in the stiff approach to singular endpoints
  std::function<double(double)> pos_T_log_integral;
};

// With T <= T_upper and |cos_p^{p-1} sin_p| <= w_max, the phase past x can
// gain at most alpha*(L-x) + w_max/(p-1) * int max(T_upper, 0).
inline std::function<bool(double, double)> no_hit_certificate(
    const ShootSpec& spec, const PTrigTable& trig, double alpha) {
  if (!spec.pos_T_log_integral) return nullptr;
  const double quarter = trig.quarter();
  const double wmax = trig.coupling_max();
  const double pm1 = trig.p() - 1.0;
  const double L = spec.x_hi_limit;
  auto posint = spec.pos_T_log_integral;
  return [=](double x, double phi) {
    const double gain = alpha * (L - x) + wmax * posint(x) / pm1;
    return quarter - phi > gain;
  };
}

// Boundary mismatch at a given lambda: negative once the far level is hit
// strictly inside the domain, positive while the phase falls short of it.
inline double boundary_mismatch(const ShootSpec& spec, const PTrigTable& trig,
                                double lambda, const OdeOptions& opts_in,
                                PrueferTrajectory* out = nullptr) {
  OdeOptions opts = opts_in;
  opts.hit_impossible =
      no_hit_certificate(spec, trig, alpha_of(lambda, trig.p()));
  PrueferTrajectory tr = integrate_phase_split(spec.T_at, trig, lambda, spec.seed_x,
                                               spec.seed_phi, +1, spec.x_hi_limit,
                                               spec.breakpoints, opts);
  double g;
  if (tr.b_hit)
    g = *tr.b_hit - spec.D;
  else
    g = (trig.quarter() - tr.phis.back()) * spec.D / trig.pi_p();
  if (out) *out = std::move(tr);
  return g;
}

inline GapResult min_lambda(const ShootSpec& spec, const PTrigTable& trig,
                            const Tolerances& tol) {
  const double p = trig.p();
  OdeOptions opts;
  opts.rtol = tol.ode_rtol;
  opts.atol = tol.ode_atol;
  opts.event_phi_tol = tol.event_phi_tol;
  opts.record = false;

  GapResult res;
  int evals = 0;

  // classical starting scale: the gap of the flat weight on [0, D]
  const double lambda0 = (p - 1.0) * std::pow(trig.pi_p() / spec.D, p);
  double lo = 0.0, g_lo = spec.D;  // lambda = 0 never hits
  double hi = lambda0;
  double g_hi = boundary_mismatch(spec, trig, hi, opts);
  ++evals;
  int doublings = 0;
  while (g_hi >= 0.0) {
    lo = hi;
    g_lo = g_hi;
    hi *= 2.0;
    g_hi = boundary_mismatch(spec, trig, hi, opts);
    ++evals;
    if (++doublings > 60)
      throw SolverError("min_lambda: no interior hit up to lambda_max = " +
                            std::to_string(hi),
                        spec.D);
  }

  int iters = 0;
  while (hi - lo > tol.eig_rel * hi && iters < 200) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = boundary_mismatch(spec, trig, mid, opts);
    ++evals;
    ++iters;
    if (g_mid < 0.0) {
      hi = mid;
      g_hi = g_mid;
    } else {
      lo = mid;
      g_lo = g_mid;
    }
  }

  // final trajectory at the certified upper end (interior hits exist there)
  OdeOptions rec_opts = opts;
  rec_opts.record = true;
  PrueferTrajectory right;
  const double g_final = boundary_mismatch(spec, trig, hi, rec_opts, &right);
  ++evals;

  PrueferTrajectory full = right;
  if (spec.two_sided) {
    PrueferTrajectory left =
        integrate_phase_split(spec.T_at, trig, hi, spec.seed_x, spec.seed_phi, -1,
                              spec.x_lo_limit, spec.breakpoints, rec_opts);
    full.a_hit = left.a_hit;
    full.a_hit_residual = left.a_hit_residual;
    full.min_rhs = std::min(full.min_rhs, left.min_rhs);
    full.phase_decreased = full.phase_decreased || left.phase_decreased;
    // merge samples (left leg is already in increasing order, ends at seed)
    std::vector<double> xs(left.xs.begin(), left.xs.end() - 1);
    std::vector<double> ph(left.phis.begin(), left.phis.end() - 1);
    std::vector<double> dp(left.dphis.begin(), left.dphis.end() - 1);
    xs.insert(xs.end(), right.xs.begin(), right.xs.end());
    ph.insert(ph.end(), right.phis.begin(), right.phis.end());
    dp.insert(dp.end(), right.dphis.begin(), right.dphis.end());
    full.xs = std::move(xs);
    full.phis = std::move(ph);
    full.dphis = std::move(dp);
  } else {
    // the seed itself sits on the near level
    full.a_hit = spec.seed_x;
    full.a_hit_residual = 0.0;
  }

  res.lambda = hi;
  res.bracket = {lo, hi};
  res.iterations = iters;
  res.trajectory = std::move(full);
  res.diag.g_at_lo = g_lo;
  res.diag.g_at_hi = g_final;
  res.diag.g_evaluations = evals;
  res.diag.hit_residual = res.trajectory.b_hit_residual;
  res.diag.endpoint_gap_a =
      res.trajectory.a_hit ? std::abs(*res.trajectory.a_hit) : kInf;
  res.diag.endpoint_gap_b =
      res.trajectory.b_hit ? std::abs(spec.D - *res.trajectory.b_hit) : kInf;
  return res;
}

}  // namespace gap_detail

// Minimal lambda of the glued model log-derivative T_{K,N,D}. The model is
// antisymmetric about D/2, so seeding at (D/2, 0) and shooting right
// determines the eigenvalue; the returned trajectory covers both halves.
inline GapResult lambda_hat(const Params& pr, const PTrigTable& trig) {
  Params prc = pr;
  gap_detail::ShootSpec spec;
  spec.T_at = [prc](double x) {
    return model_T(std::clamp(x, 0.0, prc.D), prc);
  };
  spec.D = pr.D;
  spec.breakpoints = {0.5 * pr.D};
  spec.seed_x = 0.5 * pr.D;
  spec.seed_phi = 0.0;
  spec.x_hi_limit = pr.D * (1.0 - pr.tol.endpoint_guard);
  spec.two_sided = true;
  spec.x_lo_limit = pr.D * pr.tol.endpoint_guard;
  spec.pos_T_log_integral = gap_detail::pos_cot_integral(pr.K, pr.N, spec.x_hi_limit);
  GapResult res = gap_detail::min_lambda(spec, trig, pr.tol);
  res.method = GapMethod::shooting;
  return res;
}

inline GapResult lambda_hat(const Params& pr) {
  PTrigTable trig(pr.p, pr.tol.trig_table_tol);
  return lambda_hat(pr, trig);
}

// Minimal lambda for an arbitrary admissible density: shoot from
// (seed_offset*D, -pi_p/2). The density is validated first.
inline GapResult lambda_of_density(const MCPDensity& h, PExponent p,
                                   const PTrigTable& trig,
                                   const Tolerances& tol = {}) {
  Params pr(p, h.K(), h.N(), h.D(), tol);
  const ValidationReport rep = mcp_validate(h, pr);
  if (!rep.pass)
    throw std::invalid_argument("lambda_of_density: density fails validation: " +
                                rep.detail);

  const double D = h.D();
  const double guard = tol.endpoint_guard * D;
  MCPDensity hc = h;
  gap_detail::ShootSpec spec;
  spec.T_at = [hc, guard, D](double x) {
    return hc.T_at(std::clamp(x, guard, D - guard));
  };
  spec.D = D;
  spec.breakpoints = {0.5 * D};
  spec.seed_x = tol.seed_offset * D;
  spec.seed_phi = -0.5 * trig.pi_p();
  spec.x_hi_limit = D * (1.0 - tol.endpoint_guard);
  spec.two_sided = false;
  spec.pos_T_log_integral =
      gap_detail::pos_cot_integral(h.K(), h.N(), spec.x_hi_limit);
  GapResult res = gap_detail::min_lambda(spec, trig, tol);
  res.method = GapMethod::shooting;
  return res;
}

inline GapResult lambda_of_density(const MCPDensity& h, PExponent p,
                                   const Tolerances& tol = {}) {
  PTrigTable trig(p, tol.trig_table_tol);
  return lambda_of_density(h, p, trig, tol);
}

// Sharp constant: lambda_hat for K <= 0; for K > 0 the infimum of
// lambda_hat over D' in (0, min(D, D_{K,N})], located by a logarithmic scan
// refined with golden-section around the best local minima. Ties report the
// smallest D'.
inline GapResult lambda_sharp(const Params& pr) {
  PTrigTable trig(pr.p, pr.tol.trig_table_tol);
  if (pr.K <= 0.0) {
    GapResult res = lambda_hat(pr, trig);
    res.method = GapMethod::shooting;
    res.minimizing_Dprime = pr.D;
    return res;
  }

  const double Dmax = std::min(pr.D, diameter_bound(pr.K, pr.N));
  const int n_scan = 64;
  const double Dmin = Dmax / 100.0;
  int total_solves = 0;
  auto hat_at = [&](double Dp) {
    Params q(pr.p, pr.K, pr.N, Dp, pr.tol);
    ++total_solves;
    return lambda_hat(q, trig).lambda;
  };

  std::vector<double> Ds(n_scan), Ls(n_scan);
  for (int i = 0; i < n_scan; ++i) {
    const double t = static_cast<double>(i) / (n_scan - 1);
    Ds[i] = Dmin * std::pow(Dmax / Dmin, t);
    Ls[i] = hat_at(Ds[i]);
  }

  // local minima of the scan, boundaries included
  std::vector<int> candidates;
  for (int i = 0; i < n_scan; ++i) {
    const bool left_ok = (i == 0) || Ls[i] <= Ls[i - 1];
    const bool right_ok = (i == n_scan - 1) || Ls[i] <= Ls[i + 1];
    if (left_ok && right_ok) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](int a, int b) { return Ls[a] < Ls[b]; });
  if (candidates.size() > 3) candidates.resize(3);

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double best_L = kInf, best_D = Dmax;
  for (int idx : candidates) {
    double a = Ds[std::max(idx - 1, 0)];
    double b = Ds[std::min(idx + 1, n_scan - 1)];
    if (a == b) {
      if (Ls[idx] < best_L - 1e-12 * Ls[idx] ||
          (std::abs(Ls[idx] - best_L) <= 1e-12 * best_L && Ds[idx] < best_D)) {
        best_L = Ls[idx];
        best_D = Ds[idx];
      }
      continue;
    }
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = hat_at(x1), f2 = hat_at(x2);
    while (b - a > 1e-6 * b) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - invphi * (b - a);
        f1 = hat_at(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + invphi * (b - a);
        f2 = hat_at(x2);
      }
    }
    const double Dc = 0.5 * (a + b);
    const double Lc = std::min(f1, f2);
    if (Lc < best_L * (1.0 - 1e-9) ||
        (std::abs(Lc - best_L) <= 1e-9 * best_L && Dc < best_D)) {
      best_L = Lc;
      best_D = Dc;
    }
  }

  Params q(pr.p, pr.K, pr.N, best_D, pr.tol);
  GapResult res = lambda_hat(q, trig);
  res.method = GapMethod::infimum_scan;
  res.minimizing_Dprime = best_D;
  res.iterations = total_solves;
  return res;
}

// Table of lambda_sharp along a grid of diameters, with the monotonicity
// facts attached: always non-increasing, strictly decreasing for K <= 0.
struct MonotonicityReport {
  std::vector<double> D_grid;
  std::vector<double> lambda;
  bool nonincreasing = true;
  bool strictly_decreasing = true;  // meaningful for K <= 0
  double min_drop = kInf;           // smallest relative decrease between steps
};

inline MonotonicityReport monotonicity_audit(const Params& pr,
                                             const std::vector<double>& D_grid) {
  MonotonicityReport rep;
  rep.D_grid = D_grid;
  for (double D : D_grid) {
    Params q(pr.p, pr.K, pr.N, D, pr.tol);
    rep.lambda.push_back(lambda_sharp(q).lambda);
  }
  for (std::size_t i = 0; i + 1 < rep.lambda.size(); ++i) {
    if (rep.D_grid[i + 1] == rep.D_grid[i]) continue;  // repeated diameters
    const double drop = (rep.lambda[i] - rep.lambda[i + 1]) / rep.lambda[i];
    rep.min_drop = std::min(rep.min_drop, drop);
    if (rep.lambda[i + 1] > rep.lambda[i] * (1.0 + 4.0 * pr.tol.eig_rel))
      rep.nonincreasing = false;
    if (drop <= 10.0 * pr.tol.eig_rel) rep.strictly_decreasing = false;
  }
  return rep;
}

}  // namespace pgap
