#pragma once

// One-dimensional MCP(K,N) densities on [0,D]: grid representation by
// log-density and log-derivative, validation against the two-sided ratio
// characterization, random admissible generation, rescaling, mollification
// and CSV serialization.
//
// A density h lies in the admissible class F_{K,N,D} iff for all
// 0 <= x0 <= x1 <= D
//   (s(D-x1)/s(D-x0))^{N-1} <= h(x1)/h(x0) <= (s(x1)/s(x0))^{N-1},
// with s = s_{K/(N-1)}; equivalently iff a.e.
//   -cot_{K,N,D}(D-x) <= (ln h)'(x) <= cot_{K,N,D}(x).
// Densities may vanish at the interval ends (like the models); interior
// zeros are rejected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pgap/geometry.hpp"
#include "pgap/rng.hpp"

namespace pgap {

namespace density_detail {

// 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr double kGlx[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
inline constexpr double kGlw[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

template <class F>
double gauss16(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) acc += kGlw[i] * f(mid + half * kGlx[i]);
  return acc * half;
}

// Integrate f over [a,b] with an integrable (logarithmic) singularity at one
// end: geometrically graded subdivision toward that end.
template <class F>
double graded_gauss(F&& f, double a, double b, bool singular_at_a) {
  double acc = 0.0;
  const double w = b - a;
  const double inner = singular_at_a ? a : b;
  const double outer = singular_at_a ? b : a;
  double prev = outer;
  for (int j = 1; j <= 54; ++j) {
    const double cut = inner + (outer - inner) * std::ldexp(1.0, -j);
    if (cut == prev || cut == inner) break;
    acc += singular_at_a ? gauss16(f, cut, prev) : gauss16(f, prev, cut);
    prev = cut;
    if (std::abs(cut - inner) < 1e-17 * w) break;
  }
  return acc;
}

inline double bernstein(const std::vector<double>& coef, double u) {
  std::vector<double> b = coef;
  for (std::size_t r = 1; r < coef.size(); ++r)
    for (std::size_t i = 0; i + r < coef.size(); ++i)
      b[i] = (1.0 - u) * b[i] + u * b[i + 1];
  return coef.empty() ? 0.0 : b[0];
}

}  // namespace density_detail

struct ValidationReport {
  bool pass = false;
  double max_ratio_violation = 0.0;     // log-domain excess over the ratio bounds
  double max_logderiv_violation = 0.0;  // excess over the pointwise bounds
  double tol = 0.0;
  std::size_t worst_i = 0, worst_j = 0;  // node pair of the worst ratio violation
  std::string detail;

  double max_violation() const {
    return std::max(max_ratio_violation, max_logderiv_violation);
  }
};

class MCPDensity {
 public:
  using LogDerivFn = std::function<double(double)>;

  // Checked construction from nodal data. log_h and log_deriv may be -inf /
  // +-inf only at the first and last node (vanishing endpoints); interior
  // nodes must be finite.
  static MCPDensity from_grid(double K, double N, std::vector<double> x,
                              std::vector<double> log_h,
                              std::vector<double> log_deriv,
                              LogDerivFn analytic_T = nullptr) {
    const std::size_t n = x.size();
    if (n < 8 || log_h.size() != n || log_deriv.size() != n)
      throw std::invalid_argument("MCPDensity: need >= 8 nodes and equal-length columns");
    if (!(N > 1.0)) throw std::invalid_argument("MCPDensity: N must be > 1");
    if (std::abs(x.front()) > 1e-12 * std::max(1.0, std::abs(x.back())))
      throw std::invalid_argument("MCPDensity: grid must start at 0");
    x.front() = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x[i] < x[i + 1]))
        throw std::invalid_argument("MCPDensity: grid must be strictly increasing");
    for (std::size_t i = 0; i < n; ++i) {
      const bool endpoint = (i == 0 || i + 1 == n);
      if (std::isnan(log_h[i]) || std::isnan(log_deriv[i]))
        throw std::invalid_argument("MCPDensity: NaN entry");
      if (!endpoint && (!std::isfinite(log_h[i]) || !std::isfinite(log_deriv[i])))
        throw std::invalid_argument("MCPDensity: interior nodes must be finite");
      if (std::isinf(log_h[i]) && log_h[i] > 0.0)
        throw std::invalid_argument("MCPDensity: log_h may only be -inf");
    }
    return MCPDensity(K, N, std::move(x), std::move(log_h), std::move(log_deriv),
                      std::move(analytic_T));
  }

  double K() const noexcept { return K_; }
  double N() const noexcept { return N_; }
  double D() const noexcept { return x_.back(); }
  const std::vector<double>& grid() const noexcept { return x_; }
  const std::vector<double>& log_h() const noexcept { return log_h_; }
  const std::vector<double>& log_deriv() const noexcept { return log_deriv_; }
  bool has_analytic_T() const noexcept { return static_cast<bool>(analytic_T_); }

  // log h by linear interpolation; endpoint cells with a vanishing node use
  // the power-law profile h ~ x^beta implied by the neighbouring T value.
  double log_h_at(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) return log_h_.front();
    if (x >= x_.back()) return log_h_.back();
    std::size_t i = cell_index(x);
    if (i == 0 && std::isinf(log_h_.front())) {
      const double beta = log_deriv_[1] * x_[1];
      return log_h_[1] + beta * std::log(x / x_[1]);
    }
    if (i + 2 == n && std::isinf(log_h_.back())) {
      const double beta = -log_deriv_[n - 2] * (x_.back() - x_[n - 2]);
      return log_h_[n - 2] + beta * std::log((x_.back() - x) / (x_.back() - x_[n - 2]));
    }
    const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return (1.0 - w) * log_h_[i] + w * log_h_[i + 1];
  }

  double h_at(double x) const { return std::exp(log_h_at(x)); }

  // T = (ln h)'. Uses the attached analytic evaluator when present, else
  // linear interpolation of the nodal values with non-finite endpoint nodes
  // replaced by their nearest finite neighbour.
  double T_at(double x) const {
    if (analytic_T_) return analytic_T_(x);
    const std::size_t n = x_.size();
    if (x <= x_.front()) return finite_or(log_deriv_.front(), log_deriv_[1]);
    if (x >= x_.back()) return finite_or(log_deriv_.back(), log_deriv_[n - 2]);
    const std::size_t i = cell_index(x);
    const double tl = (i == 0) ? finite_or(log_deriv_[0], log_deriv_[1]) : log_deriv_[i];
    const double tr = (i + 2 == n) ? finite_or(log_deriv_[n - 1], log_deriv_[n - 2])
                                   : log_deriv_[i + 1];
    const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return (1.0 - w) * tl + w * tr;
  }

  // Max mismatch between stored log_h increments and the trapezoid integral
  // of log_deriv, over cells with finite data.
  double reconstruction_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      if (!std::isfinite(log_h_[i]) || !std::isfinite(log_h_[i + 1])) continue;
      if (!std::isfinite(log_deriv_[i]) || !std::isfinite(log_deriv_[i + 1])) continue;
      const double trap =
          0.5 * (log_deriv_[i] + log_deriv_[i + 1]) * (x_[i + 1] - x_[i]);
      worst = std::max(worst, std::abs(log_h_[i + 1] - log_h_[i] - trap));
    }
    return worst;
  }

  MCPDensity with_analytic_T(LogDerivFn fn) const {
    MCPDensity d = *this;
    d.analytic_T_ = std::move(fn);
    return d;
  }
  MCPDensity without_analytic_T() const { return with_analytic_T(nullptr); }

  // additive shift of log h (multiplicative rescaling of h)
  MCPDensity shifted(double dlog) const {
    MCPDensity d = *this;
    for (auto& v : d.log_h_)
      if (std::isfinite(v)) v += dlog;
    return d;
  }

 private:
  MCPDensity(double K, double N, std::vector<double> x, std::vector<double> lh,
             std::vector<double> ld, LogDerivFn analytic)
      : K_(K), N_(N), x_(std::move(x)), log_h_(std::move(lh)),
        log_deriv_(std::move(ld)), analytic_T_(std::move(analytic)) {}

  static double finite_or(double v, double fallback) {
    return std::isfinite(v) ? v : fallback;
  }

  std::size_t cell_index(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
  }

  double K_, N_;
  std::vector<double> x_, log_h_, log_deriv_;
  LogDerivFn analytic_T_;
};

// ---------------------------------------------------------------------------
// validation

// Check the two monotone-ratio conditions on consecutive node pairs plus a
// deterministic sample of long-range pairs, and the pointwise log-derivative
// bounds at the nodes. Violations are measured in the log domain, so the
// verdict is invariant under rescaling of h.
inline ValidationReport mcp_validate(const MCPDensity& h, const Params& pr) {
  const auto& x = h.grid();
  const auto& lh = h.log_h();
  const auto& ld = h.log_deriv();
  const std::size_t n = x.size();
  if (std::abs(h.D() - pr.D) > 1e-9 * std::max(1.0, pr.D))
    throw std::invalid_argument("mcp_validate: density support does not match params.D");

  const double kap = pr.kappa();
  std::vector<double> ls1(n), ls2(n);  // ln s(x), ln s(D-x)
  for (std::size_t i = 0; i < n; ++i) {
    const double s1 = s_kappa_clamped(x[i], kap);
    const double s2 = s_kappa_clamped(pr.D - x[i], kap);
    ls1[i] = s1 > 0.0 ? std::log(s1) : -kInf;
    ls2[i] = s2 > 0.0 ? std::log(s2) : -kInf;
  }
  const double Nm1 = pr.N - 1.0;

  ValidationReport rep;
  rep.tol = pr.tol.validate_tol;

  auto check_pair = [&](std::size_t i, std::size_t j) {
    if (!std::isfinite(lh[i]) || !std::isfinite(lh[j])) return;  // vanishing end: no constraint
    const double dlh = lh[j] - lh[i];
    if (std::isfinite(ls1[i]) && std::isfinite(ls1[j])) {
      const double viol = dlh - Nm1 * (ls1[j] - ls1[i]);
      if (viol > rep.max_ratio_violation) {
        rep.max_ratio_violation = viol;
        rep.worst_i = i;
        rep.worst_j = j;
      }
    }
    if (std::isfinite(ls2[i]) && std::isfinite(ls2[j])) {
      const double viol = Nm1 * (ls2[j] - ls2[i]) - dlh;
      if (viol > rep.max_ratio_violation) {
        rep.max_ratio_violation = viol;
        rep.worst_i = i;
        rep.worst_j = j;
      }
    }
  };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    check_pair(i, i + 1);
    CounterRng rng(0x9d2c5680u, i);
    for (int k = 0; k < 10; ++k) {
      const std::size_t span = n - 1 - i;
      if (span < 2) break;
      const std::size_t j = i + 1 + static_cast<std::size_t>(rng.next_uniform() * (span - 1));
      check_pair(i, std::min(j, n - 1));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(ld[i])) continue;  // singular endpoint slope: no finite check
    if (x[i] > 0.0 && x[i] < pr.D) {
      const double up = cot_knd_clamped(x[i], pr.K, pr.N);
      const double lo = -cot_knd_clamped(pr.D - x[i], pr.K, pr.N);
      rep.max_logderiv_violation =
          std::max({rep.max_logderiv_violation, ld[i] - up, lo - ld[i]});
    } else if (x[i] == 0.0) {
      const double lo = -cot_knd_clamped(pr.D, pr.K, pr.N);
      rep.max_logderiv_violation = std::max(rep.max_logderiv_violation, lo - ld[i]);
    } else {
      const double up = cot_knd_clamped(pr.D, pr.K, pr.N);
      rep.max_logderiv_violation = std::max(rep.max_logderiv_violation, ld[i] - up);
    }
  }

  rep.pass = rep.max_violation() <= rep.tol;
  if (!rep.pass) {
    std::ostringstream os;
    os << "violation " << rep.max_violation() << " > tol " << rep.tol
       << " (worst ratio pair " << rep.worst_i << "," << rep.worst_j << ")";
    rep.detail = os.str();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// construction of admissible densities

// Density with log-derivative T = theta*cot_knd(x) + (1-theta)*(-cot_knd(D-x)),
// theta: [0,D] -> [0,1]. Any such mixture satisfies the pointwise bounds, so
// the result is admissible by construction. log h is accumulated with
// per-cell quadrature that handles the integrable endpoint singularities
// exactly in the boundary terms:
//   int_a^b T = [theta*A + (1-theta)*B]_a^b - int_a^b theta' (A - B),
// with A = (N-1) ln s(x), B = (N-1) ln s(D-x).
inline MCPDensity density_from_theta(const Params& pr,
                                     const std::function<double(double)>& theta,
                                     const std::function<double(double)>& dtheta,
                                     std::size_t cells = 4096) {
  const double D = pr.D, kap = pr.kappa(), Nm1 = pr.N - 1.0;
  const std::size_t n = cells + 1;
  std::vector<double> x(n), lh(n), ld(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = D * static_cast<double>(i) / cells;
  x.back() = D;

  auto A = [&](double t) {
    const double s = s_kappa_clamped(t, kap);
    return s > 0.0 ? Nm1 * std::log(s) : -kInf;
  };
  auto B = [&](double t) { return A(D - t); };
  auto AmB = [&](double t) {
    const double d = dtheta(t);
    return d == 0.0 ? 0.0 : d * (A(t) - B(t));
  };

  const double K = pr.K, N = pr.N;
  auto T_of = [theta, D, K, N](double t) {
    const double th = theta(t);
    double val = 0.0;
    if (th != 0.0) val += th * cot_knd_clamped(t, K, N);
    if (th != 1.0) val -= (1.0 - th) * cot_knd_clamped(D - t, K, N);
    return val;
  };
  for (std::size_t i = 0; i < n; ++i) ld[i] = T_of(x[i]);

  // increments of log h per cell
  std::vector<double> inc(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = x[i], b = x[i + 1];
    const bool sing_a = (i == 0);
    const bool sing_b = (i + 1 == cells);
    double boundary = 0.0;
    const double tha = theta(a), thb = theta(b);
    // theta*A at b minus at a; 0 * (-inf) resolves to 0 (absent component)
    auto prod = [](double w, double v) { return w == 0.0 ? 0.0 : w * v; };
    boundary += prod(thb, A(b)) - prod(tha, A(a));
    boundary += prod(1.0 - thb, B(b)) - prod(1.0 - tha, B(a));
    double correction;
    if (sing_a || sing_b)
      correction = density_detail::graded_gauss(AmB, a, b, sing_a);
    else
      correction = density_detail::gauss16(AmB, a, b);
    inc[i] = boundary - correction;
  }

  // anchor log h = 0 at the mid node
  const std::size_t mid = cells / 2;
  lh[mid] = 0.0;
  for (std::size_t i = mid; i < cells; ++i) lh[i + 1] = lh[i] + inc[i];
  for (std::size_t i = mid; i-- > 0;) lh[i] = lh[i + 1] - inc[i];

  auto analytic = [T_of](double t) { return T_of(t); };
  return MCPDensity::from_grid(pr.K, pr.N, std::move(x), std::move(lh),
                               std::move(ld), analytic);
}

// Random admissible density: theta is a Bernstein polynomial of the given
// degree with coefficients uniform in [0,1].
inline MCPDensity random_density(const Params& pr, std::uint64_t seed,
                                 int degree = 6, std::size_t cells = 4096) {
  if (degree < 0) throw std::invalid_argument("random_density: degree must be >= 0");
  CounterRng rng(seed, 0xB5);
  auto coef = std::make_shared<std::vector<double>>();
  for (int k = 0; k <= degree; ++k) coef->push_back(rng.next_uniform());
  std::vector<double> dcoef;
  for (int k = 0; k < degree; ++k)
    dcoef.push_back(degree * ((*coef)[k + 1] - (*coef)[k]));
  auto dcoefp = std::make_shared<std::vector<double>>(std::move(dcoef));
  const double D = pr.D;
  auto theta = [coef, D](double t) {
    return density_detail::bernstein(*coef, t / D);
  };
  auto dtheta = [dcoefp, D](double t) {
    return dcoefp->empty() ? 0.0 : density_detail::bernstein(*dcoefp, t / D) / D;
  };
  return density_from_theta(pr, theta, dtheta, cells);
}

// The extremal model densities as grid objects with exact nodal data and
// attached analytic log-derivatives.
inline MCPDensity model_density(const Params& pr, std::size_t cells = 4096) {
  const double D = pr.D;
  const std::size_t n = cells + 1;
  std::vector<double> x(n), lh(n), ld(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = D * static_cast<double>(i) / cells;
    lh[i] = model_log_h(x[i], pr);
    ld[i] = model_T(x[i], pr);
  }
  x.back() = D;
  // at conjugate endpoints (K > 0, D = D_{K,N}) the model log-derivative diverges
  if (pr.K > 0.0 && pr.D >= diameter_bound(pr.K, pr.N) * (1.0 - 1e-12)) {
    ld.front() = kInf;
    ld.back() = -kInf;
  }
  Params prc = pr;
  auto analytic = [prc](double t) { return model_T(t, prc); };
  return MCPDensity::from_grid(pr.K, pr.N, std::move(x), std::move(lh),
                               std::move(ld), analytic);
}

inline MCPDensity model_density_h1(const Params& pr, std::size_t cells = 4096) {
  const double D = pr.D;
  const std::size_t n = cells + 1;
  std::vector<double> x(n), lh(n), ld(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = D * static_cast<double>(i) / cells;
    lh[i] = model_log_h1(x[i], pr);
    ld[i] = cot_knd_clamped(x[i], pr.K, pr.N);
  }
  x.back() = D;
  Params prc = pr;
  auto analytic = [prc](double t) { return cot_knd_clamped(t, prc.K, prc.N); };
  return MCPDensity::from_grid(pr.K, pr.N, std::move(x), std::move(lh),
                               std::move(ld), analytic);
}

inline MCPDensity model_density_h2(const Params& pr, std::size_t cells = 4096) {
  const double D = pr.D;
  const std::size_t n = cells + 1;
  std::vector<double> x(n), lh(n), ld(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = D * static_cast<double>(i) / cells;
    lh[i] = model_log_h2(x[i], pr);
    ld[i] = -cot_knd_clamped(D - x[i], pr.K, pr.N);
  }
  x.back() = D;
  Params prc = pr;
  auto analytic = [prc](double t) { return -cot_knd_clamped(prc.D - t, prc.K, prc.N); };
  return MCPDensity::from_grid(pr.K, pr.N, std::move(x), std::move(lh),
                               std::move(ld), analytic);
}

// ---------------------------------------------------------------------------
// transformations

// h_bar(x) = h(x * D_old/D_new) on [0, D_new]; the admissible class parameter
// rescales as K_new = K * (D_old/D_new)^2.
inline MCPDensity rescale_density(const MCPDensity& h, double D_new) {
  if (!(D_new > 0.0) || !std::isfinite(D_new))
    throw std::invalid_argument("rescale_density: D_new must be positive");
  const double D_old = h.D();
  const double ratio = D_old / D_new;  // x_old = ratio * x_new
  std::vector<double> x = h.grid(), lh = h.log_h(), ld = h.log_deriv();
  for (auto& xi : x) xi /= ratio;
  x.back() = D_new;
  for (auto& t : ld) t *= ratio;
  MCPDensity::LogDerivFn analytic = nullptr;
  if (h.has_analytic_T()) {
    MCPDensity base = h;
    analytic = [base, ratio](double t) { return ratio * base.T_at(ratio * t); };
  }
  return MCPDensity::from_grid(h.K() * ratio * ratio, h.N(), std::move(x),
                               std::move(lh), std::move(ld), std::move(analytic));
}

// Mollification of h by a compactly supported C^inf bump of half-width
// `width`, with constant extension beyond [0,D]. Kernel weights are
// normalized discretely, so constants are preserved exactly.
inline MCPDensity smooth_density(const MCPDensity& h, double width) {
  const double D = h.D();
  if (!(width > 0.0)) throw std::invalid_argument("smooth_density: width must be > 0");
  if (width > 0.25 * D)
    throw std::invalid_argument("smooth_density: width too large relative to D");

  const int half = 32;  // quadrature points per kernel half-width
  std::vector<double> w(2 * half + 1), dw(2 * half + 1);
  const double dy = width / half;
  for (int j = -half; j <= half; ++j) {
    const double r = static_cast<double>(j) / half;
    const double y = j * dy;
    if (std::abs(r) >= 1.0) {
      w[j + half] = dw[j + half] = 0.0;
      continue;
    }
    const double bump = std::exp(-1.0 / (1.0 - r * r));
    w[j + half] = bump;
    dw[j + half] = bump * (-2.0 * y / (width * width)) / ((1.0 - r * r) * (1.0 - r * r));
  }
  double wsum = 0.0;
  for (double v : w) wsum += v;
  for (auto& v : w) v /= wsum;
  for (auto& v : dw) v /= wsum;
  double dsum = 0.0;
  for (double v : dw) dsum += v;
  for (auto& v : dw) v -= dsum / static_cast<double>(dw.size());

  auto h_ext = [&](double x) {
    return h.h_at(std::min(std::max(x, 0.0), D));
  };

  const auto& xs = h.grid();
  const std::size_t n = xs.size();
  std::vector<double> lh(n), ld(n);
  for (std::size_t i = 0; i < n; ++i) {
    double hs = 0.0, dhs = 0.0;
    for (int j = -half; j <= half; ++j) {
      const double hv = h_ext(xs[i] - j * dy);
      hs += w[j + half] * hv;
      dhs += dw[j + half] * hv;
    }
    lh[i] = std::log(hs);
    ld[i] = dhs / hs;
  }
  std::vector<double> x = xs;
  return MCPDensity::from_grid(h.K(), h.N(), std::move(x), std::move(lh),
                               std::move(ld), nullptr);
}

// ---------------------------------------------------------------------------
// CSV serialization: header "x,log_h,log_deriv", 17 significant digits.

inline void write_density_csv(std::ostream& os, const MCPDensity& h) {
  os << "x,log_h,log_deriv\n";
  char buf[96];
  for (std::size_t i = 0; i < h.grid().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", h.grid()[i],
                  h.log_h()[i], h.log_deriv()[i]);
    os << buf;
  }
}

inline void write_density_csv(const std::string& path, const MCPDensity& h) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_density_csv(os, h);
}

inline MCPDensity read_density_csv(std::istream& is, double K, double N) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("density csv line 1: empty file");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "x,log_h,log_deriv")
    throw std::runtime_error("density csv line 1: expected header 'x,log_h,log_deriv'");
  std::vector<double> x, lh, ld;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double a, b, c;
    char extra;
    const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf%c", &a, &b, &c, &extra);
    if (got != 3)
      throw std::runtime_error("density csv line " + std::to_string(lineno) +
                               ": expected 'x,log_h,log_deriv'");
    x.push_back(a);
    lh.push_back(b);
    ld.push_back(c);
  }
  try {
    return MCPDensity::from_grid(K, N, std::move(x), std::move(lh), std::move(ld));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("density csv: ") + e.what());
  }
}

inline MCPDensity read_density_csv(const std::string& path, double K, double N) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_density_csv(is, K, N);
}

}  // namespace pgap
