#pragma once

// Comparison-geometry scalars for one-dimensional model spaces: the warped
// sine s_kappa, the contraction coefficient sigma, the Bonnet-Myers diameter
// bound, the logarithmic-derivative bound cot_{K,N,D}, and the extremal model
// densities h1, h2, h with log-derivative T.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pgap/ptrig.hpp"

namespace pgap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// s_kappa(theta): sin(sqrt(k) theta)/sqrt(k) for k > 0, theta for k = 0,
// sinh(sqrt(-k) theta)/sqrt(-k) for k < 0. For k > 0 only theta < pi/sqrt(k).
inline double s_kappa(double theta, double kappa) {
  if (theta < 0.0) throw std::invalid_argument("s_kappa: theta must be >= 0");
  if (kappa > 0.0) {
    const double rk = std::sqrt(kappa);
    if (theta >= std::numbers::pi / rk)
      throw std::invalid_argument("s_kappa: theta outside [0, pi/sqrt(kappa))");
    return std::sin(rk * theta) / rk;
  }
  if (kappa < 0.0) {
    const double rk = std::sqrt(-kappa);
    return std::sinh(rk * theta) / rk;
  }
  return theta;
}

// d/dtheta s_kappa: cos, 1, or cosh of the scaled argument.
inline double s_kappa_prime(double theta, double kappa) {
  if (kappa > 0.0) return std::cos(std::sqrt(kappa) * theta);
  if (kappa < 0.0) return std::cosh(std::sqrt(-kappa) * theta);
  return 1.0;
}

// Contraction coefficient sigma^{(t)}_{K,N}(theta); +inf on the branch
// K theta^2 >= (N-1) pi^2.
inline double sigma_coeff(double t, double theta, double K, double N) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sigma_coeff: t in [0,1]");
  if (theta < 0.0) throw std::invalid_argument("sigma_coeff: theta >= 0");
  const double Kt2 = K * theta * theta;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  if (Kt2 >= (N - 1.0) * pi2) return kInf;
  if (Kt2 == 0.0) return t;
  const double r = std::sqrt(std::abs(K) / (N - 1.0)) * theta;
  if (Kt2 > 0.0) return std::sin(t * r) / std::sin(r);
  return std::sinh(t * r) / std::sinh(r);
}

// Bonnet-Myers diameter bound: pi / sqrt(K/(N-1)) for K > 0, else +inf.
inline double diameter_bound(double K, double N) {
  if (!(N > 1.0)) throw std::invalid_argument("diameter_bound: N must be > 1");
  if (K > 0.0) return std::numbers::pi / std::sqrt(K / (N - 1.0));
  return kInf;
}

// cot_{K,N,D}(x) = (N-1) s'_{K/(N-1)}(x) / s_{K/(N-1)}(x); +inf at x = 0.
inline double cot_knd(double x, double K, double N) {
  if (x < 0.0) throw std::invalid_argument("cot_knd: x must be >= 0");
  if (x == 0.0) return kInf;
  if (K > 0.0) {
    const double kap = K / (N - 1.0);
    if (x >= diameter_bound(K, N))
      throw std::invalid_argument("cot_knd: x outside (0, D_{K,N}) for K > 0");
    return std::sqrt(K * (N - 1.0)) / std::tan(std::sqrt(kap) * x);
  }
  if (K < 0.0) {
    const double rk = std::sqrt(-K / (N - 1.0));
    return std::sqrt(-K * (N - 1.0)) / std::tanh(rk * x);
  }
  return (N - 1.0) / x;
}

namespace geometry_detail {

// Pull arguments that sit exactly on a conjugate point (K > 0 with
// theta = pi/sqrt(kappa)) just inside the open domain.
inline double domain_clamp(double theta, double kappa) {
  if (kappa > 0.0) {
    const double lim = std::nextafter(std::numbers::pi / std::sqrt(kappa), 0.0);
    return std::min(theta, lim);
  }
  return theta;
}

}  // namespace geometry_detail

// Evaluation tolerant of boundary arguments; used where model formulas are
// evaluated at interval ends that may be conjugate points.
inline double s_kappa_clamped(double theta, double kappa) {
  return s_kappa(geometry_detail::domain_clamp(std::max(theta, 0.0), kappa), kappa);
}

inline double cot_knd_clamped(double x, double K, double N) {
  if (x <= 0.0) return kInf;
  return cot_knd(geometry_detail::domain_clamp(x, K / (N - 1.0)), K, N);
}

// Solver tolerance bundle shared by the density and eigenvalue machinery.
struct Tolerances {
  double eig_rel = 1e-8;          // relative width of the final lambda bracket
  double ode_rtol = 1e-10;        // phase integration, relative
  double ode_atol = 1e-12;        // phase integration, absolute
  double event_phi_tol = 1e-10;   // |phi(hit) - target|
  double validate_tol = 1e-8;     // admissible violation in mcp_validate
  double trig_table_tol = 1e-12;  // PTrigTable interpolation error
  double endpoint_guard = 1e-12;  // x clamped into [g*D, (1-g)*D] by the ODE
  double seed_offset = 1e-10;     // shooting seed at seed_offset*D
};

// The governing quadruple (p, K, N, D) plus tolerances.
struct Params {
  PExponent p;
  double K;
  double N;
  double D;
  Tolerances tol;

  Params(PExponent p_, double K_, double N_, double D_, Tolerances tol_ = {})
      : p(p_), K(K_), N(N_), D(D_), tol(tol_) {
    if (!std::isfinite(K) || !std::isfinite(N) || !std::isfinite(D))
      throw std::invalid_argument("Params: K, N, D must be finite");
    if (!(N > 1.0)) throw std::invalid_argument("Params: N must be > 1");
    if (!(D > 0.0)) throw std::invalid_argument("Params: D must be > 0");
    if (K > 0.0) {
      const double dmax = diameter_bound(K, N);
      if (D > dmax * (1.0 + 1e-12))
        throw std::invalid_argument("Params: D exceeds the diameter bound for K > 0");
      D = std::min(D, dmax);
    }
  }

  double kappa() const { return K / (N - 1.0); }
};

// Model densities: h1 = s_kappa(x)^{N-1}, h2 = s_kappa(D-x)^{N-1} and the
// glued extremal h (h2 on the left half, h1 on the right half).
inline double model_h1(double x, const Params& pr) {
  if (x < 0.0 || x > pr.D) throw std::invalid_argument("model_h1: x outside [0, D]");
  return std::pow(s_kappa_clamped(x, pr.kappa()), pr.N - 1.0);
}

inline double model_h2(double x, const Params& pr) {
  if (x < 0.0 || x > pr.D) throw std::invalid_argument("model_h2: x outside [0, D]");
  return std::pow(s_kappa_clamped(pr.D - x, pr.kappa()), pr.N - 1.0);
}

inline double model_h(double x, const Params& pr) {
  return x < 0.5 * pr.D ? model_h2(x, pr) : model_h1(x, pr);
}

// T_{K,N,D} = (ln h)' of the glued model: cot_{K,N,D}(x) on [D/2, D],
// -cot_{K,N,D}(D-x) on [0, D/2). At the jump x = D/2 the right branch is
// returned. Singular monotone at the interval ends when they are conjugate
// points (K > 0 with D = D_{K,N}).
inline double model_T(double x, const Params& pr) {
  if (x < 0.0 || x > pr.D) throw std::invalid_argument("model_T: x outside [0, D]");
  if (x >= 0.5 * pr.D) return cot_knd_clamped(x, pr.K, pr.N);
  return -cot_knd_clamped(pr.D - x, pr.K, pr.N);
}

// log h1 and log h2 (natural logarithm), -inf where the density vanishes.
inline double model_log_h1(double x, const Params& pr) {
  const double s = s_kappa_clamped(x, pr.kappa());
  return s > 0.0 ? (pr.N - 1.0) * std::log(s) : -kInf;
}

inline double model_log_h2(double x, const Params& pr) {
  const double s = s_kappa_clamped(pr.D - x, pr.kappa());
  return s > 0.0 ? (pr.N - 1.0) * std::log(s) : -kInf;
}

inline double model_log_h(double x, const Params& pr) {
  return x < 0.5 * pr.D ? model_log_h2(x, pr) : model_log_h1(x, pr);
}

}  // namespace pgap
