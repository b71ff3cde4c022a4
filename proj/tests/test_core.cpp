#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "per1/core.hpp"

using namespace per1;

namespace {

// Independent oracle: both roots of f'(z) = 3z^2 + 2az + 1 by the textbook
// formula with Newton polish, unordered.
std::pair<cplx, cplx> derivative_roots(cplx a) {
  const cplx disc = std::sqrt(4.0 * a * a - 12.0);
  cplx r1 = (-2.0 * a + disc) / 6.0, r2 = (-2.0 * a - disc) / 6.0;
  for (cplx* r : {&r1, &r2})
    for (int i = 0; i < 3; ++i) *r -= df(a, *r) / (6.0 * *r + 2.0 * a);
  return {r1, r2};
}

// Brute-force Newton from a grid on g(a) = f^{n+1}(c-(a)), derivative by
// finite differences. Slow and independent of the polynomial elimination.
std::vector<cplx> brute_misiurewicz(int n, const Window& w) {
  std::vector<cplx> out;
  auto g = [n](cplx a) {
    cplx z = critical_points(a).minus;
    for (int k = 0; k <= n; ++k) z = f(a, z);
    return z;
  };
  for (double x = w.re_min; x <= w.re_max; x += 0.05)
    for (double y = w.im_min; y <= w.im_max; y += 0.05) {
      cplx a(x, y);
      for (int it = 0; it < 60; ++it) {
        const double h = 1e-7;
        const cplx d = (g(a + h) - g(a - h)) / (2 * h);
        if (std::abs(d) < 1e-14) break;
        a -= g(a) / d;
        if (std::abs(a) > 10) break;
      }
      if (!w.contains(a) || std::abs(g(a)) > 1e-10) continue;
      cplx z = critical_points(a).minus;
      for (int k = 0; k < n; ++k) z = f(a, z);
      if (std::abs(z) < 1e-4) continue;
      bool dup = false;
      for (cplx b : out) dup = dup || std::abs(a - b) < 1e-6;
      if (!dup) out.push_back(a);
    }
  return out;
}

}  // namespace

TEST_CASE("critical points at the documented parameters") {
  auto c = critical_points(kSqrt3);
  CHECK(std::abs(c.plus - cplx(-kSqrt3 / 3, 0)) < 1e-7);
  CHECK(std::abs(c.minus - cplx(-kSqrt3 / 3, 0)) < 1e-7);
  CHECK_THROWS_AS(critical_points(kSqrt3, true), DomainError);
  c = critical_points(2.0);
  CHECK(std::abs(c.plus - (-1.0 / 3)) < 1e-15);
  CHECK(std::abs(c.minus - (-1.0)) < 1e-15);
  c = critical_points(-2.0);
  CHECK(std::abs(c.plus - (1.0 / 3)) < 1e-15);
  CHECK(std::abs(c.minus - 1.0) < 1e-15);
  c = critical_points(0.0);
  CHECK(std::abs(c.plus - cplx(0, 1 / kSqrt3)) < 1e-15);
}

TEST_CASE("critical values") {
  CHECK(std::abs(critical_values(2.0).minus) < 1e-15);
  auto v = critical_values(kSqrt3);
  CHECK(std::abs(v.plus - (-kSqrt3 / 9)) < 1e-7);
  CHECK(std::abs(v.minus - (-kSqrt3 / 9)) < 1e-7);
  for (double th : {0.1, 1.0, 2.5, 4.0}) {
    const cplx a = std::polar(1000.0, th);
    CHECK(std::abs(27.0 * critical_values(a).minus / (4.0 * a * a * a) - 1.0) < 1e-5);
  }
}

TEST_CASE("critical points solve f' = 0 on random parameters") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 10000; ++i) {
    const cplx a(u(rng), u(rng));
    const auto c = critical_points(a);
    const auto [r1, r2] = derivative_roots(a);
    const double scale = std::max(1.0, std::norm(a));
    CHECK(std::abs(df(a, c.plus)) < 1e-11 * scale);
    CHECK(std::abs(df(a, c.minus)) < 1e-11 * scale);
    // the pair agrees with the oracle as a set
    const double d = std::min(std::abs(c.plus - r1) + std::abs(c.minus - r2),
                              std::abs(c.plus - r2) + std::abs(c.minus - r1));
    CHECK(d < 1e-9 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("branch continuity along |a| = 2") {
  const int n = 10000;
  cplx prev_p = critical_points(2.0).plus, prev_m = critical_points(2.0).minus;
  double worst = 0;
  for (int k = 1; k <= n; ++k) {
    const auto c = critical_points(std::polar(2.0, kTwoPi * k / n));
    worst = std::max({worst, std::abs(c.plus - prev_p), std::abs(c.minus - prev_m)});
    prev_p = c.plus;
    prev_m = c.minus;
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("exact symmetries of the critical data") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int i = 0; i < 2000; ++i) {
    const cplx a(u(rng), u(rng));
    const auto c = critical_points(a), cn = critical_points(-a), cc = critical_points(std::conj(a));
    CHECK(cn.minus == -c.minus);
    CHECK(cn.plus == -c.plus);
    CHECK(cc.minus == std::conj(c.minus));
    CHECK(cc.plus == std::conj(c.plus));
  }
  // the cut takes the upper limit for either sign of a
  CHECK(critical_points(0.7).plus.imag() > 0);
  CHECK(critical_points(-0.7).plus.imag() > 0);
}

TEST_CASE("escape classification") {
  auto v = escape_classify(10.0, 100.0, 10);
  CHECK(v.escaped);
  CHECK(v.n == 1);
  CHECK(!escape_classify(1.0, 0.0, 1000).escaped);
  const cplx a = 4.0;
  v = escape_classify(a, critical_points(a).minus, 200);
  CHECK(v.escaped);
  CHECK(v.n <= 200);
  // monotone in the budget
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 300; ++i) {
    const cplx b(u(rng), u(rng)), z(u(rng), u(rng));
    const auto small = escape_classify(b, z, 20), big = escape_classify(b, z, 400);
    if (small.escaped) {
      CHECK(big.escaped);
      CHECK(big.n == small.n);
    }
  }
}

TEST_CASE("green function") {
  CHECK(green_function(1.0, 0.0) == 0.0);
  CHECK(std::abs(green_function(10.0, 100.0) - std::log(100.0)) < 0.1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  const double tol = 1e-12;
  int tested = 0;
  for (int i = 0; i < 500; ++i) {
    const cplx a(u(rng), u(rng)), z(u(rng), u(rng));
    const double g = green_function(a, z, tol);
    if (g == 0.0) continue;
    ++tested;
    CHECK(std::abs(green_function(a, f(a, z), tol) - 3 * g) < 3 * tol + 1e-13 * g);
  }
  CHECK(tested > 100);
  CHECK_THROWS_AS(green_function(1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("rational angles") {
  RationalAngle t(2, 6);
  CHECK(t.num() == 1);
  CHECK(t.den() == 3);
  CHECK(t.times3() == RationalAngle(0, 1));
  CHECK(RationalAngle(1, 7).times2(3) == RationalAngle(1, 7));
  CHECK(RationalAngle(5, 8).times3(2) == RationalAngle(5, 8));
  CHECK(RationalAngle(1, 2) + RationalAngle(2, 3) == RationalAngle(1, 6));
  CHECK(RationalAngle(-1, 4) == RationalAngle(3, 4));
}

TEST_CASE("Misiurewicz-parabolic parameters") {
  const Window w{-3, 3, -3, 3};
  auto z0 = solve_misiurewicz_parabolic(0, w);
  REQUIRE(z0.size() == 2);
  CHECK(std::abs(z0[0] + 2.0) < 1e-12);
  CHECK(std::abs(z0[1] - 2.0) < 1e-12);

  for (int n : {1, 2}) {
    const auto roots = solve_misiurewicz_parabolic(n, w);
    for (cplx a : roots) CHECK(critical_relation_residual(OrbitTarget::Zero, n, a) < 1e-10);
    const auto brute = brute_misiurewicz(n, Window{-3, 3, -3, 3});
    // every brute-force root is found by elimination
    for (cplx b : brute) {
      double best = 1e9;
      for (cplx a : roots) best = std::min(best, std::abs(a - b));
      CHECK(best < 1e-8);
    }
    CHECK(roots.size() >= brute.size());
    MESSAGE("depth ", n, ": ", roots.size(), " roots, brute force ", brute.size());
  }
  CHECK_THROWS_AS(solve_misiurewicz_parabolic(6, Window{-3, 3, -3, 3}), DomainError);
}

TEST_CASE("capture centres and the quarter points") {
  const auto s0 = solve_critical_relation(OrbitTarget::CPlus, 0, Window{-3, 3, -3, 3});
  CHECK(s0.size() == 4);
  for (cplx a : s0) CHECK(critical_relation_residual(OrbitTarget::CPlus, 0, a) < 1e-10);
  const auto c1 = solve_critical_relation(OrbitTarget::CPlus, 1, Window{-3, 3, -3, 3});
  CHECK(!c1.empty());
  const auto q = solve_critical_relation(OrbitTarget::VPlus, 1, Window{-3, 3, -3, 3});
  for (cplx a : q) CHECK(critical_relation_residual(OrbitTarget::VPlus, 1, a) < 1e-10);
}
