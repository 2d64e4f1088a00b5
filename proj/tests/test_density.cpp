#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "pgap/density.hpp"

using namespace pgap;
using Catch::Approx;

namespace {

Params params_for(double K, double N, double D_frac = 1.0) {
  double D = 1.0;
  if (K > 0.0) D = D_frac * diameter_bound(K, N);
  return Params(PExponent(2.0), K, N, D);
}

MCPDensity flat_density(double D, std::size_t cells = 512) {
  std::vector<double> x(cells + 1), lh(cells + 1, 0.0), ld(cells + 1, 0.0);
  for (std::size_t i = 0; i <= cells; ++i) x[i] = D * double(i) / cells;
  return MCPDensity::from_grid(0.0, 2.0, x, lh, ld);
}

}  // namespace

TEST_CASE("model densities are admissible", "[density]") {
  for (double N : {2.0, 5.0}) {
    for (double K : {-1.0, 0.0, 1.0}) {
      Params pr = params_for(K, N, K > 0.0 ? 0.8 : 1.0);
      INFO("K=" << K << " N=" << N);
      for (auto make : {model_density, model_density_h1, model_density_h2}) {
        auto rep = mcp_validate(make(pr, 1024), pr);
        CHECK(rep.pass);
        CHECK(rep.max_violation() <= 1e-10);
      }
    }
  }
  // conjugate endpoints: the glued model at full diameter
  Params full(PExponent(2.0), 1.0, 3.0, diameter_bound(1.0, 3.0));
  auto rep = mcp_validate(model_density(full, 1024), full);
  CHECK(rep.pass);
}

TEST_CASE("flat density is admissible for K = 0", "[density]") {
  Params pr(PExponent(2.0), 0.0, 2.0, 3.0);
  auto rep = mcp_validate(flat_density(3.0), pr);
  CHECK(rep.pass);
  CHECK(rep.max_violation() <= 1e-12);
}

TEST_CASE("steep exponential density is rejected", "[density]") {
  // h = e^{3x} on [0,1] violates the upper ratio bound for K = 0, N = 2
  const std::size_t cells = 512;
  std::vector<double> x(cells + 1), lh(cells + 1), ld(cells + 1, 3.0);
  for (std::size_t i = 0; i <= cells; ++i) {
    x[i] = double(i) / cells;
    lh[i] = 3.0 * x[i];
  }
  auto h = MCPDensity::from_grid(0.0, 2.0, x, lh, ld);
  Params pr(PExponent(2.0), 0.0, 2.0, 1.0);
  auto rep = mcp_validate(h, pr);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_violation() > 0.1);
}

TEST_CASE("validation is invariant under rescaling of h", "[density]") {
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);
  auto h = random_density(pr, 42, 6, 1024);
  auto r1 = mcp_validate(h, pr);
  auto r2 = mcp_validate(h.shifted(7.3), pr);
  CHECK(r1.pass == r2.pass);
  CHECK(r1.max_ratio_violation == Approx(r2.max_ratio_violation).margin(1e-13));
}

TEST_CASE("mixture construction reproduces the extremal densities", "[density]") {
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);
  auto expect_matches = [&](const MCPDensity& got, const MCPDensity& want) {
    const auto& lg = got.log_h();
    const auto& lw = want.log_h();
    REQUIRE(lg.size() == lw.size());
    // equality up to one common additive constant
    double shift = 0.0;
    std::size_t n_fin = 0;
    for (std::size_t i = 0; i < lg.size(); ++i)
      if (std::isfinite(lg[i]) && std::isfinite(lw[i])) {
        shift += lw[i] - lg[i];
        ++n_fin;
      }
    shift /= double(n_fin);
    for (std::size_t i = 0; i < lg.size(); i += 7) {
      if (!std::isfinite(lg[i]) || !std::isfinite(lw[i])) continue;
      CHECK(lg[i] + shift == Approx(lw[i]).margin(1e-8));
    }
  };
  auto one = [](double) { return 1.0; };
  auto zero = [](double) { return 0.0; };
  auto dzero = [](double) { return 0.0; };
  expect_matches(density_from_theta(pr, one, dzero, 1024), model_density_h1(pr, 1024));
  expect_matches(density_from_theta(pr, zero, dzero, 1024), model_density_h2(pr, 1024));
  auto step = [&pr](double x) { return x >= 0.5 * pr.D ? 1.0 : 0.0; };
  expect_matches(density_from_theta(pr, step, dzero, 1024), model_density(pr, 1024));
}

TEST_CASE("random densities always validate", "[density]") {
  int checked = 0;
  for (double N : {2.0, 5.0}) {
    for (double K : {-1.0, 0.0, 1.0}) {
      Params pr = params_for(K, N, K > 0.0 ? 0.9 : 1.0);
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto h = random_density(pr, seed, 6, 1024);
        auto rep = mcp_validate(h, pr);
        INFO("K=" << K << " N=" << N << " seed=" << seed
             << " violation=" << rep.max_violation());
        REQUIRE(rep.pass);
        ++checked;
      }
    }
  }
  CHECK(checked == 600);
  // a few at the production grid resolution
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);
  for (std::uint64_t seed = 100; seed < 110; ++seed)
    CHECK(mcp_validate(random_density(pr, seed), pr).pass);
}

TEST_CASE("random densities are reproducible and internally consistent", "[density]") {
  Params pr(PExponent(2.0), -1.0, 2.0, 1.5);
  auto a = random_density(pr, 7, 6, 1024);
  auto b = random_density(pr, 7, 6, 1024);
  CHECK(a.log_h() == b.log_h());
  CHECK(a.reconstruction_error() <= 1e-8);
  auto c = random_density(pr, 8, 6, 1024);
  CHECK(a.log_h() != c.log_h());
}

TEST_CASE("rescaling", "[density]") {
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);
  auto h = random_density(pr, 3, 6, 1024);

  SECTION("identity") {
    auto same = rescale_density(h, 1.0);
    CHECK(same.K() == Approx(-1.0).epsilon(1e-15));
    CHECK(same.log_h() == h.log_h());
  }
  SECTION("curvature scaling K' = (D/D_new)^2 K") {
    auto wide = rescale_density(h, 2.0);
    CHECK(wide.K() == Approx(-0.25).epsilon(1e-14));
    CHECK(wide.D() == 2.0);
    Params prw(pr.p, wide.K(), pr.N, 2.0);
    CHECK(mcp_validate(wide, prw).pass);
    // round trip
    auto back = rescale_density(wide, 1.0);
    CHECK(back.K() == Approx(-1.0).epsilon(1e-13));
    for (std::size_t i = 0; i < h.grid().size(); i += 101) {
      CHECK(back.grid()[i] == Approx(h.grid()[i]).margin(1e-14));
      if (std::isfinite(h.log_deriv()[i]))
        CHECK(back.log_deriv()[i] == Approx(h.log_deriv()[i]).margin(1e-8));
    }
  }
  SECTION("flat-curvature power density stays admissible") {
    Params p0(PExponent(2.0), 0.0, 3.0, 1.0);
    auto h1 = model_density_h1(p0, 1024);
    auto wide = rescale_density(h1, 2.0);
    CHECK(wide.K() == 0.0);
    Params prw(PExponent(2.0), 0.0, 3.0, 2.0);
    CHECK(mcp_validate(wide, prw).pass);
    // h1 for K = 0 is x^{N-1}; rescaled it is (x/2)^{N-1}
    CHECK(wide.h_at(1.0) == Approx(std::pow(0.5, 2.0)).epsilon(1e-9));
  }
  SECTION("invalid target") {
    CHECK_THROWS_AS(rescale_density(h, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rescale_density(h, -2.0), std::invalid_argument);
  }
}

TEST_CASE("mollification", "[density]") {
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);

  SECTION("constants are preserved exactly") {
    auto flat = flat_density(1.0);
    auto s = smooth_density(flat, 0.05);
    for (std::size_t i = 0; i < s.log_h().size(); i += 37)
      CHECK(s.log_h()[i] == Approx(0.0).margin(1e-14));
  }
  SECTION("small width is close to the identity") {
    auto h = random_density(pr, 11, 6, 512);
    auto s = smooth_density(h, 1e-4);
    for (std::size_t i = 20; i < s.log_h().size() - 20; i += 23)
      CHECK(s.log_h()[i] == Approx(h.log_h()[i]).margin(1e-6));
  }
  SECTION("the model kink becomes a continuous log-derivative") {
    auto m = model_density(pr, 1024);
    auto s = smooth_density(m, 0.03);
    const auto& x = s.grid();
    const auto& ld = s.log_deriv();
    const std::size_t mid = 512;
    REQUIRE(x[mid] == Approx(0.5));
    // raw model jumps by 2*cot(D/2) across D/2; smoothed slope varies gently
    const double jump_raw =
        model_T(0.5, pr) - model_T(0.5 - 1e-9, pr);
    const double jump_smooth = ld[mid + 1] - ld[mid - 1];
    CHECK(std::abs(jump_smooth) < 0.05 * std::abs(jump_raw));
    // and the smoothed density is admissible at a relaxed tolerance
    Params relaxed = pr;
    relaxed.tol.validate_tol = 0.05;
    CHECK(mcp_validate(s, relaxed).pass);
  }
  SECTION("width validation") {
    auto h = random_density(pr, 1, 6, 512);
    CHECK_THROWS_AS(smooth_density(h, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(smooth_density(h, 0.0), std::invalid_argument);
  }
}

TEST_CASE("ratio and log-derivative checks agree on smooth densities", "[density]") {
  // both characterizations pass admissible mixtures and both reject a
  // density pushed just beyond the upper envelope
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto h = random_density(pr, seed, 4, 1024);
    auto rep = mcp_validate(h, pr);
    CHECK(rep.max_ratio_violation <= rep.tol);
    CHECK(rep.max_logderiv_violation <= rep.tol);
  }
  // inflate the log-derivative beyond the allowed cone
  auto h = model_density_h1(pr, 1024);
  std::vector<double> x = h.grid(), lh = h.log_h(), ld = h.log_deriv();
  for (std::size_t i = 0; i < lh.size(); ++i) {
    if (std::isfinite(lh[i])) lh[i] *= 1.05;
    if (std::isfinite(ld[i])) ld[i] *= 1.05;
  }
  auto bad = MCPDensity::from_grid(-1.0, 3.0, x, lh, ld);
  auto rep = mcp_validate(bad, pr);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_ratio_violation > rep.tol);
  CHECK(rep.max_logderiv_violation > rep.tol);
}

TEST_CASE("grid construction rejects malformed data", "[density]") {
  std::vector<double> x{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> lh(9, 0.0), ld(9, 0.0);
  CHECK_NOTHROW(MCPDensity::from_grid(0.0, 2.0, x, lh, ld));

  auto bad_x = x;
  bad_x[3] = bad_x[2];
  CHECK_THROWS_AS(MCPDensity::from_grid(0.0, 2.0, bad_x, lh, ld),
                  std::invalid_argument);

  auto bad_start = x;
  bad_start[0] = 0.1;
  CHECK_THROWS_AS(MCPDensity::from_grid(0.0, 2.0, bad_start, lh, ld),
                  std::invalid_argument);

  auto inf_interior = lh;
  inf_interior[4] = -kInf;
  CHECK_THROWS_AS(MCPDensity::from_grid(0.0, 2.0, x, inf_interior, ld),
                  std::invalid_argument);

  auto nan_entry = ld;
  nan_entry[2] = std::nan("");
  CHECK_THROWS_AS(MCPDensity::from_grid(0.0, 2.0, x, lh, nan_entry),
                  std::invalid_argument);

  // vanishing endpoints are fine
  auto lh_end = lh;
  lh_end[0] = -kInf;
  CHECK_NOTHROW(MCPDensity::from_grid(0.0, 2.0, x, lh_end, ld));
}

TEST_CASE("csv round trip", "[density]") {
  Params pr(PExponent(2.0), -1.0, 3.0, 1.0);
  auto h = random_density(pr, 5, 6, 256);
  std::ostringstream os;
  write_density_csv(os, h);
  std::istringstream is(os.str());
  auto back = read_density_csv(is, -1.0, 3.0);
  CHECK(back.grid() == h.grid());
  CHECK(back.log_h() == h.log_h());
  CHECK(back.log_deriv() == h.log_deriv());
  CHECK_FALSE(back.has_analytic_T());

  // vanishing endpoints serialize through inf tokens
  auto m = model_density_h1(pr, 256);
  std::ostringstream os2;
  write_density_csv(os2, m);
  std::istringstream is2(os2.str());
  auto mb = read_density_csv(is2, -1.0, 3.0);
  CHECK(mb.log_h().front() == -kInf);
  CHECK(std::isinf(mb.log_deriv().front()));
}

TEST_CASE("csv parse errors carry line numbers", "[density]") {
  {
    std::istringstream is("x,bad_header\n0,0,0\n");
    CHECK_THROWS_WITH(read_density_csv(is, 0.0, 2.0),
                      Catch::Matchers::ContainsSubstring("line 1"));
  }
  {
    std::istringstream is("x,log_h,log_deriv\n0,0,0\n0.5,zero\n");
    CHECK_THROWS_WITH(read_density_csv(is, 0.0, 2.0),
                      Catch::Matchers::ContainsSubstring("line 3"));
  }
}
