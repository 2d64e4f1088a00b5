#pragma once

// Independent discretized Rayleigh-quotient minimizer for the first nonzero
// Neumann eigenvalue of the weighted p-Laplacian: forward differences for
// the energy, trapezoid quadrature for the mass, zero-mean projection by a
// scalar shift, projected gradient descent with Armijo backtracking and a
// coarse-to-fine mesh ladder. Deliberately shares no machinery with the
// phase-equation solver: this is the cross-check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgap/density.hpp"
#include "pgap/geometry.hpp"
#include "pgap/rng.hpp"

namespace pgap {

struct DiscreteProblem {
  double D = 0.0;
  std::vector<double> h;  // weight at M+1 uniform nodes on [0, D]
  double p = 2.0;

  std::size_t cells() const { return h.size() - 1; }
  double dx() const { return D / static_cast<double>(cells()); }

  static DiscreteProblem uniform(double D, std::size_t M, PExponent p) {
    DiscreteProblem pr;
    pr.D = D;
    pr.h.assign(M + 1, 1.0);
    pr.p = p.value();
    check(pr);
    return pr;
  }

  static DiscreteProblem from_density(const MCPDensity& d, std::size_t M,
                                      PExponent p) {
    DiscreteProblem pr;
    pr.D = d.D();
    pr.p = p.value();
    pr.h.resize(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
      const double x = pr.D * static_cast<double>(i) / M;
      pr.h[i] = d.h_at(x);
    }
    check(pr);
    return pr;
  }

  static void check(const DiscreteProblem& pr) {
    if (pr.h.size() < 9) throw std::invalid_argument("DiscreteProblem: mesh too coarse");
    double mass = 0.0;
    for (std::size_t i = 0; i < pr.h.size(); ++i) {
      if (!(pr.h[i] >= 0.0) || !std::isfinite(pr.h[i]))
        throw std::invalid_argument("DiscreteProblem: weights must be finite and >= 0");
      mass += pr.h[i];
    }
    if (!(mass > 0.0)) throw std::invalid_argument("DiscreteProblem: zero total mass");
  }
};

namespace oracle_detail {

inline double spow(double x, double q) {
  if (x == 0.0) return 0.0;
  return x < 0.0 ? -std::pow(-x, q) : std::pow(x, q);
}

inline double node_weight(const DiscreteProblem& pr, std::size_t i) {
  const double dx = pr.dx();
  return (i == 0 || i == pr.cells()) ? 0.5 * dx : dx;
}

}  // namespace oracle_detail

namespace oracle_detail {

inline long double rayleigh_value_ld(const std::vector<double>& u,
                                     const DiscreteProblem& pr) {
  const std::size_t M = pr.cells();
  if (u.size() != M + 1)
    throw std::invalid_argument("rayleigh_value: size mismatch");
  const double dx = pr.dx(), p = pr.p;
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < M; ++i) {
    const double d = (u[i + 1] - u[i]) / dx;
    num += std::pow(std::abs(d), p) * 0.5 * (pr.h[i] + pr.h[i + 1]) * dx;
  }
  for (std::size_t i = 0; i <= M; ++i)
    den += std::pow(std::abs(u[i]), p) * pr.h[i] * node_weight(pr, i);
  if (!(den > 0.0L)) throw std::invalid_argument("rayleigh_value: zero denominator");
  return num / den;
}

}  // namespace oracle_detail

// (sum_cells |du/dx|^p hbar dx) / (sum_nodes |u|^p h w), hbar the cell
// midpoint weight, w the trapezoid weights.
inline double rayleigh_value(const std::vector<double>& u, const DiscreteProblem& pr) {
  return static_cast<double>(oracle_detail::rayleigh_value_ld(u, pr));
}

namespace oracle_detail {

// c -> sum (u - c)|u - c|^{p-2} h w is strictly decreasing; solve for the
// zero-mean shift by Newton safeguarded with a bracket.
inline double zero_mean_shift(const std::vector<double>& u, const DiscreteProblem& pr) {
  const double p = pr.p;
  double lo = u[0], hi = u[0];
  for (double v : u) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) return lo;  // constant input shifts to zero

  auto eval = [&](double c, double* scale = nullptr) {
    long double g = 0.0L, s = 0.0L;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double hw = pr.h[i] * node_weight(pr, i);
      if (hw == 0.0) continue;
      const double d = u[i] - c;
      g += spow(d, p - 1.0) * hw;
      s += std::pow(std::abs(d), p) * hw;
    }
    if (scale) *scale = static_cast<double>(s);
    return static_cast<double>(g);
  };

  double c = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double s;
    const double g = eval(c, &s);
    if (std::abs(g) <= 1e-12 * std::max(s, 1e-300)) break;
    if (g > 0.0) lo = c; else hi = c;
    // derivative -(p-1) sum |u-c|^{p-2} h w
    double dg = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double hw = pr.h[i] * node_weight(pr, i);
      if (hw == 0.0) continue;
      const double ad = std::abs(u[i] - c);
      if (ad > 0.0) dg += std::pow(ad, p - 2.0) * hw;
    }
    dg *= -(p - 1.0);
    double next = dg < 0.0 ? c - g / dg : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - c) <= 1e-16 * std::max(1.0, std::abs(c))) { c = next; break; }
    c = next;
  }
  return c;
}

inline void project_and_normalize(std::vector<double>& u, const DiscreteProblem& pr) {
  const double c = zero_mean_shift(u, pr);
  for (auto& v : u) v -= c;
  double den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    den += std::pow(std::abs(u[i]), pr.p) * pr.h[i] * node_weight(pr, i);
  const double scale = std::pow(den, 1.0 / pr.p);
  if (scale > 0.0)
    for (auto& v : u) v /= scale;
}

// gradient of the Rayleigh quotient at u (assumed normalized: den = 1)
inline void rayleigh_gradient(const std::vector<double>& u, const DiscreteProblem& pr,
                              double R, std::vector<double>& grad) {
  const std::size_t M = pr.cells();
  const double dx = pr.dx(), p = pr.p;
  grad.assign(M + 1, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    const double d = (u[i + 1] - u[i]) / dx;
    const double t = p * spow(d, p - 1.0) * 0.5 * (pr.h[i] + pr.h[i + 1]);
    grad[i] -= t;
    grad[i + 1] += t;
  }
  for (std::size_t i = 0; i <= M; ++i)
    grad[i] -= R * p * spow(u[i], p - 1.0) * pr.h[i] * node_weight(pr, i);
}

// gradient of the constraint C(u) = sum u|u|^{p-2} h w
inline std::vector<double> constraint_normal(const std::vector<double>& u,
                                             const DiscreteProblem& pr) {
  const double p = pr.p;
  double umax = 0.0;
  for (double v : u) umax = std::max(umax, std::abs(v));
  const double floor = 1e-10 * std::max(umax, 1e-300);
  std::vector<double> normal(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double hw = pr.h[i] * node_weight(pr, i);
    normal[i] = (p - 1.0) * std::pow(std::max(std::abs(u[i]), floor), p - 2.0) * hw;
  }
  return normal;
}

// remove the component along the constraint normal
inline void project_gradient(const std::vector<double>& u, const DiscreteProblem& pr,
                             std::vector<double>& grad) {
  const std::vector<double> normal = constraint_normal(u, pr);
  double gn = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    gn += grad[i] * normal[i];
    nn += normal[i] * normal[i];
  }
  if (nn > 0.0)
    for (std::size_t i = 0; i < u.size(); ++i) grad[i] -= (gn / nn) * normal[i];
}

// Symmetric tridiagonal solver for the descent preconditioner: the energy
// operator linearized at the current iterate (cell weights (p-1)|u'|^{p-2},
// clamped) plus a small mass shift. Applying its inverse to the gradient
// removes the mesh-width stiffness of the plain flow while keeping the
// method a projected descent with Armijo control.
struct EnergyPreconditioner {
  std::vector<double> diag, off;

  EnergyPreconditioner(const DiscreteProblem& pr, const std::vector<double>* u) {
    const std::size_t M = pr.cells();
    const double dx = pr.dx();
    const double p = pr.p;
    const double sigma = 1e-2 * std::pow(std::numbers::pi / pr.D, 2.0);
    off.resize(M);
    diag.resize(M + 1);
    std::vector<double> cw(M, 1.0);  // cell stiffness factors
    if (u && p != 2.0) {
      double dmax = 0.0;
      for (std::size_t i = 0; i < M; ++i)
        dmax = std::max(dmax, std::abs((*u)[i + 1] - (*u)[i]) / dx);
      // for p < 2 small slopes carry huge true curvature; keep it
      const double floor = (p < 2.0 ? 1e-12 : 1e-4) * std::max(dmax, 1e-300);
      for (std::size_t i = 0; i < M; ++i) {
        const double d = std::max(std::abs((*u)[i + 1] - (*u)[i]) / dx, floor);
        cw[i] = (p - 1.0) * std::pow(d, p - 2.0);
      }
    }
    for (std::size_t i = 0; i < M; ++i)
      off[i] = -0.5 * (pr.h[i] + pr.h[i + 1]) * cw[i] / dx;
    for (std::size_t i = 0; i <= M; ++i) {
      double d = sigma * pr.h[i] * node_weight(pr, i) + 1e-12 * dx;
      if (i > 0) d -= off[i - 1];
      if (i < M) d -= off[i];
      diag[i] = d;
    }
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    const std::size_t n = diag.size();
    std::vector<double> cp(n), dp(n), x(n);
    cp[0] = off[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double m = diag[i] - off[i - 1] * cp[i - 1];
      cp[i] = (i + 1 < n) ? off[i] / m : 0.0;
      dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / m;
    }
    x[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
  }
};

struct GdOutcome {
  std::vector<double> u;
  double value = 0.0;
  int iterations = 0;
  double pg_norm = 0.0;
  bool hit_iteration_cap = false;
  std::vector<double> history;
};

inline GdOutcome run_gd(const DiscreteProblem& pr, std::vector<double> u,
                        int max_iters, double pg_stop, double rel_stop,
                        bool keep_history) {
  project_and_normalize(u, pr);
  long double R = rayleigh_value_ld(u, pr);
  std::vector<double> grad, pgrad, gphi, dir, trial;
  double step = 1.0, pg_first = 0.0;
  GdOutcome out;
  if (keep_history) out.history.push_back(static_cast<double>(R));
  int it = 0;
  for (; it < max_iters; ++it) {
    rayleigh_gradient(u, pr, static_cast<double>(R), grad);

    // stationarity metric: gradient with the constraint-normal part removed
    pgrad = grad;
    project_gradient(u, pr, pgrad);
    double pg2 = 0.0;
    for (double g : pgrad) pg2 += g * g;
    out.pg_norm = std::sqrt(pg2);
    if (it == 0) pg_first = out.pg_norm;
    if (out.pg_norm <= pg_stop || out.pg_norm <= rel_stop * pg_first) break;

    // gradient of u -> R(u - c(u)) with c the zero-mean shift (chain rule
    // through the shift keeps the preconditioned direction smooth)
    const std::vector<double> normal = constraint_normal(u, pr);
    double g1 = 0.0, n1 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      g1 += grad[i];
      n1 += normal[i];
    }
    gphi = grad;
    if (n1 != 0.0)
      for (std::size_t i = 0; i < u.size(); ++i) gphi[i] -= (g1 / n1) * normal[i];

    const EnergyPreconditioner prec(pr, &u);
    dir = prec.solve(gphi);
    double slope = 0.0;  // descent rate of the composite objective along -dir
    for (std::size_t i = 0; i < u.size(); ++i) slope += gphi[i] * dir[i];
    if (!(slope > 0.0)) {
      dir = gphi;
      slope = 0.0;
      for (double g : gphi) slope += g * g;
      if (!(slope > 0.0)) break;
    }

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = u;
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] -= step * dir[i];
      project_and_normalize(trial, pr);
      const long double Rt = rayleigh_value_ld(trial, pr);
      if (Rt <= R - static_cast<long double>(1e-4 * step * slope)) {
        u.swap(trial);
        R = Rt;
        step = std::min(step * 1.5, 1e6);
        accepted = true;
        break;
      }
      if (step * slope < 1e-17 * std::max(1.0L, R)) break;  // below objective noise
      step *= 0.5;
    }
    if (keep_history) out.history.push_back(static_cast<double>(R));
    if (!accepted) break;  // stationary to line-search resolution
  }
  out.u = std::move(u);
  out.value = static_cast<double>(R);
  out.iterations = it;
  out.hit_iteration_cap = (it == max_iters);
  return out;
}

// Discrete p = 2 eigenvector by shifted inverse power iteration on the
// tridiagonal pencil, used as a warm start.
inline std::vector<double> p2_eigenvector(const DiscreteProblem& pr) {
  const std::size_t n = pr.h.size();
  const std::size_t M = pr.cells();
  const double dx = pr.dx();
  const double sigma = 1e-2 * std::pow(std::numbers::pi / pr.D, 2.0);
  std::vector<double> diag(n), off(M), bw(n);
  for (std::size_t i = 0; i <= M; ++i)
    bw[i] = pr.h[i] * node_weight(pr, i);
  for (std::size_t i = 0; i < M; ++i) off[i] = -0.5 * (pr.h[i] + pr.h[i + 1]) / dx;
  for (std::size_t i = 0; i <= M; ++i) {
    double d = sigma * bw[i];
    if (i > 0) d -= off[i - 1];
    if (i < M) d -= off[i];
    diag[i] = d;
  }
  double bsum = 0.0;
  for (double v : bw) bsum += v;

  std::vector<double> u(n), rhs(n), cp(n), dp(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = static_cast<double>(i) / M - 0.5;  // linear seed
  for (int it = 0; it < 80; ++it) {
    for (std::size_t i = 0; i < n; ++i) rhs[i] = bw[i] * u[i];
    // Thomas solve (diag, off) u_new = rhs
    cp[0] = off[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double m = diag[i] - (i <= M ? off[i - 1] * cp[i - 1] : 0.0);
      cp[i] = (i < M) ? off[i] / m : 0.0;
      dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / m;
    }
    u[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) u[i] = dp[i] - cp[i] * u[i + 1];
    // remove the weighted mean, renormalize
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += bw[i] * u[i];
    mean /= bsum;
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] -= mean;
      nrm += u[i] * u[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) break;
    for (auto& v : u) v /= nrm;
  }
  return u;
}

inline DiscreteProblem coarsen_to(const DiscreteProblem& pr, std::size_t M) {
  DiscreteProblem c;
  c.D = pr.D;
  c.p = pr.p;
  c.h.resize(M + 1);
  const std::size_t Mf = pr.cells();
  for (std::size_t i = 0; i <= M; ++i) {
    const double pos = static_cast<double>(i) * Mf / M;
    const std::size_t j = std::min(static_cast<std::size_t>(pos), Mf - 1);
    const double w = pos - j;
    c.h[i] = (1.0 - w) * pr.h[j] + w * pr.h[j + 1];
  }
  return c;
}

inline std::vector<double> prolong(const std::vector<double>& uc, std::size_t Mf) {
  const std::size_t Mc = uc.size() - 1;
  std::vector<double> uf(Mf + 1);
  for (std::size_t i = 0; i <= Mf; ++i) {
    const double pos = static_cast<double>(i) * Mc / Mf;
    const std::size_t j = std::min(static_cast<std::size_t>(pos), Mc - 1);
    const double w = pos - j;
    uf[i] = (1.0 - w) * uc[j] + w * uc[j + 1];
  }
  return uf;
}

}  // namespace oracle_detail

struct OracleOptions {
  int max_iters = 4000;          // at the finest level
  int level_iters = 600;         // per coarse level
  std::size_t coarsest = 256;
  double grad_tol_rel = 1e-6;    // stop when |pg| <= rel * |pg at the cold start|
};

struct MinimizeResult {
  double value = 0.0;
  std::vector<double> u;
  int iterations = 0;
  bool converged = true;
  double constraint_residual = 0.0;  // |sum u|u|^{p-2} h w| / sum |u|^p h w
  double grad_ratio = 0.0;           // |pg| at the minimizer / |pg| at the cold start
  std::vector<double> restart_values;
  std::vector<double> history;  // objective per accepted step, winning restart
};

// Minimize the Rayleigh quotient over the discrete zero-p-mean constraint
// set, from several initializations: the linear profile, the discrete p = 2
// eigenvector, and seeded smooth random perturbations.
inline MinimizeResult minimize_gap(const DiscreteProblem& pr, int restarts = 4,
                                   std::uint64_t seed = 0,
                                   const OracleOptions& opts = {}) {
  using namespace oracle_detail;
  if (restarts < 1) throw std::invalid_argument("minimize_gap: restarts must be >= 1");
  const std::size_t M = pr.cells();
  const double D = pr.D;

  // starting profiles as continuous functions of x
  std::vector<double> p2vec = p2_eigenvector(pr);
  auto start_profile = [&](int r) {
    std::vector<double> u(M + 1);
    if (r == 1) return p2vec;
    if (r == 0) {
      for (std::size_t i = 0; i <= M; ++i)
        u[i] = D * static_cast<double>(i) / M - 0.5 * D;
      return u;
    }
    CounterRng rng(seed, static_cast<std::uint64_t>(r));
    double a[4];
    for (auto& v : a) v = 2.0 * rng.next_uniform() - 1.0;
    for (std::size_t i = 0; i <= M; ++i) {
      const double x = D * static_cast<double>(i) / M;
      double v = (x / D - 0.5);
      for (int k = 1; k <= 4; ++k)
        v += 0.5 * a[k - 1] / k * std::cos(k * std::numbers::pi * x / D);
      u[i] = v;
    }
    return u;
  };

  // reference gradient scale measured at the cold (linear) start
  double pg0;
  {
    std::vector<double> u0 = start_profile(0);
    project_and_normalize(u0, pr);
    const double R0 = rayleigh_value(u0, pr);
    std::vector<double> g;
    rayleigh_gradient(u0, pr, R0, g);
    project_gradient(u0, pr, g);
    double s = 0.0;
    for (double v : g) s += v * v;
    pg0 = std::sqrt(s);
  }
  const double pg_stop = opts.grad_tol_rel * std::max(pg0, 1e-300);

  // mesh ladder
  std::vector<std::size_t> levels{M};
  while (levels.back() / 2 >= std::max<std::size_t>(opts.coarsest, 8) &&
         levels.back() % 2 == 0)
    levels.push_back(levels.back() / 2);
  std::reverse(levels.begin(), levels.end());

  MinimizeResult best;
  best.value = kInf;
  int total_iters = 0;
  for (int r = 0; r < restarts; ++r) {
    GdOutcome out;
    if (r == 1) {
      out = run_gd(pr, start_profile(r), opts.max_iters, pg_stop, 0.0, true);
    } else {
      std::vector<double> u;
      for (std::size_t li = 0; li < levels.size(); ++li) {
        const std::size_t Ml = levels[li];
        DiscreteProblem prl = (Ml == M) ? pr : coarsen_to(pr, Ml);
        if (li == 0) {
          std::vector<double> full = start_profile(r);
          u = (Ml == M) ? full : prolong(full, Ml);  // linear resample
        } else {
          u = prolong(u, Ml);
        }
        const bool final_level = (Ml == M);
        out = run_gd(prl, std::move(u), final_level ? opts.max_iters : opts.level_iters,
                     final_level ? pg_stop : 0.0, final_level ? 0.0 : 1e-5,
                     final_level);
        u = std::move(out.u);
        total_iters += out.iterations;
      }
      out.u = std::move(u);
    }
    total_iters += (r == 1) ? out.iterations : 0;
    best.restart_values.push_back(out.value);
    if (out.value < best.value) {
      best.value = out.value;
      best.u = out.u;
      best.history = out.history;
      best.grad_ratio = out.pg_norm / std::max(pg0, 1e-300);
      best.converged = !out.hit_iteration_cap || out.pg_norm <= pg_stop;
    }
  }
  best.iterations = total_iters;

  // constraint residual at the reported minimizer
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i <= M; ++i) {
    const double hw = pr.h[i] * oracle_detail::node_weight(pr, i);
    c += oracle_detail::spow(best.u[i], pr.p - 1.0) * hw;
    s += std::pow(std::abs(best.u[i]), pr.p) * hw;
  }
  best.constraint_residual = std::abs(c) / std::max(s, 1e-300);
  return best;
}

}  // namespace pgap
