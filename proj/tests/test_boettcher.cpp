#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "per1/boettcher.hpp"

using namespace per1;

namespace {

// Oracle for phi: lim (f^n z)^{1/3^n} with the branch fixed by the asymptotic
// phi(z) ~ z + a/3, valid for |z| large.
cplx phi_by_roots(cplx a, cplx z) {
  cplx w = z;
  int n = 0;
  while (n < 3 && std::abs(w) < 1e60) {
    w = f(a, w);
    ++n;
  }
  const double p = std::pow(3.0, n);
  const double mod = std::exp(std::log(std::abs(w)) / p);
  const double arg0 = std::arg(w) / p;
  const cplx hint = z + a / 3.0;
  const double k = std::round(std::remainder(std::arg(hint) - arg0, kTwoPi) / (kTwoPi / p));
  return std::polar(mod, arg0 + k * kTwoPi / p);
}

}  // namespace

TEST_CASE("boettcher normalisation and functional equation") {
  CHECK(std::abs(boettcher(1.0, 1e6) / 1e6 - 1.0) < 1e-5);
  const cplx a(2, 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> r(5, 50), th(0, kTwoPi);
  for (int i = 0; i < 100; ++i) {
    const cplx z = std::polar(r(rng), th(rng));
    const cplx p = boettcher(a, z), q = boettcher(a, f(a, z));
    CHECK(std::abs(q / (p * p * p) - 1.0) < 1e-9);
    CHECK(std::abs(std::log(std::abs(p)) - green_function(a, z)) < 1e-9);
  }
  // far out the root-extraction oracle agrees
  for (int i = 0; i < 20; ++i) {
    const cplx z = std::polar(1e3 * r(rng), th(rng));
    CHECK(std::abs(boettcher(a, z) / phi_by_roots(a, z) - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(boettcher(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(boettcher(1.0, 1.5), DomainError);  // escapes, but slowly
}

TEST_CASE("dynamical ray at a = 2, angle 0, is real and lands at 0") {
  const auto ray = trace_dynamical_ray(2.0, RationalAngle(0, 1), 1e-60);
  for (std::size_t i = 1; i < ray.samples.size(); ++i) {
    CHECK(ray.samples[i].point.imag() == 0.0);
    CHECK(ray.samples[i].point.real() < ray.samples[i - 1].point.real());
    CHECK(ray.samples[i].log_r < ray.samples[i - 1].log_r);
  }
  CHECK(ray.landing.kind == Landing::Kind::Landed);
  CHECK(std::abs(ray.landing.point) < 1e-3);
}

TEST_CASE("both rays 0 and 1/2 land at 0 for a = 2i") {
  for (int p : {0, 1}) {
    const auto ray = trace_dynamical_ray(cplx(0, 2), RationalAngle(p, 2), 1e-80);
    CHECK(ray.landing.kind == Landing::Kind::Landed);
    CHECK(std::abs(ray.landing.point) < 5e-3);
  }
}

TEST_CASE("tripling consistency of dynamical rays") {
  const cplx a(0.3, 1.1);
  const RationalAngle t(2, 7);
  for (double g : {0.5, 0.1, 0.01}) {
    auto z = solve_dynamical_point(a, g, t, 0.0);
    // reach the level by tracing instead of a blind guess
    const auto ray = trace_dynamical_ray(a, t, g);
    const cplx zt = ray.samples.back().point;
    const auto ray3 = trace_dynamical_ray(a, t.times3(), 3 * g);
    CHECK(std::abs(ray3.samples.back().point - f(a, zt)) < 1e-8);
    (void)z;
  }
}

TEST_CASE("rays at a Misiurewicz-parabolic parameter land on preimages of 0") {
  // parameters in the closed first quadrant, where the angle-0 family lands
  // on the parabolic point (the 1/2 family plays this role in -S)
  const auto roots = solve_misiurewicz_parabolic(1, Window{0, 3, 0, 3});
  REQUIRE(!roots.empty());
  for (cplx a : {cplx(2.0), roots.back()}) {
    for (int n : {1, 2}) {
      const int den = n == 1 ? 3 : 9;
      for (int k = 0; k < den; ++k) {
        const auto ray = trace_dynamical_ray(a, RationalAngle(k, den), 1e-200);
        REQUIRE(ray.landing.kind == Landing::Kind::Landed);
        CHECK(ray.landing.confidence < 1e-4);
        // the extrapolated end point sits next to an exact preimage of 0;
        // preimages through the critical point converge like a square root
        const auto snapped = snap_to_zero_preimage(a, ray.landing.point, n, 0.1);
        REQUIRE(snapped.has_value());
        cplx w = *snapped;
        for (int j = 0; j < n; ++j) w = f(a, w);
        CHECK(std::abs(w) < 1e-6);
        const auto c = critical_points(a).minus;
        if (std::abs(*snapped - c) > 0.1) CHECK(std::abs(*snapped - ray.landing.point) < 2e-3);
      }
    }
  }
}

TEST_CASE("Phi_inf asymptotics, symmetry and winding") {
  CHECK(std::abs(phi_infty(1000.0) / (4e9 / 27.0) - 1.0) < 1e-3);
  const cplx v4 = phi_infty(4.0);
  CHECK(v4.imag() == 0.0);
  CHECK(v4.real() > 1.0);
  const int n = 720;
  double total = 0;
  cplx prev = phi_infty(50.0);
  for (int k = 1; k <= n; ++k) {
    const cplx cur = phi_infty(std::polar(50.0, kTwoPi * k / n));
    total += std::arg(cur / prev);
    prev = cur;
  }
  CHECK(std::abs(total - 3 * kTwoPi) < 1e-9);
  CHECK_THROWS_AS(phi_infty(1.0), DomainError);
  // continuation route agrees with the direct series where both apply
  const cplx a(2.2, 0.4);
  CHECK(std::abs(phi_infty(a) - std::conj(phi_infty(std::conj(a)))) < 1e-10);
}

TEST_CASE("parameter rays land at the expected parameters") {
  auto r0 = trace_parameter_ray(Quadrant::S, RationalAngle(0, 1), 1e-100);
  for (const auto& s : r0.samples) CHECK(std::abs(s.point.imag()) < 1e-10);
  CHECK(r0.landing.kind == Landing::Kind::Landed);
  CHECK(std::abs(r0.landing.point - 2.0) < 1e-3);

  auto r3 = trace_parameter_ray(Quadrant::S, RationalAngle(1, 3), 1e-100);
  const auto m1 = solve_misiurewicz_parabolic(1, Window{0, 3, 0, 3});
  double best = 1e9;
  for (cplx a : m1) best = std::min(best, std::abs(a - r3.landing.point));
  CHECK(best < 1e-3);

  auto r2 = trace_parameter_ray(Quadrant::S, RationalAngle(1, 2), 1e-300);
  CHECK(std::abs(r2.landing.point) < 5e-2);

  CHECK_THROWS_AS(trace_parameter_ray(Quadrant::S, RationalAngle(9, 10), 1e-3), DomainError);
  auto ri = trace_parameter_ray(Quadrant::iS, RationalAngle(9, 10), 1e-2);
  for (const auto& s : ri.samples) CHECK(in_quadrant(Quadrant::iS, s.point, 1e-9));
}

TEST_CASE("equipotentials") {
  const double g = std::log(2.0);
  const auto e = dynamical_equipotential(1.0, g, 256);
  CHECK(e.size() == 256);
  for (cplx z : e) CHECK(std::abs(green_function(1.0, z) - g) < 1e-8);

  // f maps the level-r curve onto the level-r^3 curve
  const cplx a(0.5, 0.8);
  const auto lo = dynamical_equipotential(a, 0.2, 2048);
  const auto hi = dynamical_equipotential(a, 0.6, 2048);
  double worst = 0;
  for (cplx z : lo) {
    const cplx w = f(a, z);
    double best = 1e9;
    for (cplx y : hi) best = std::min(best, std::abs(w - y));
    worst = std::max(worst, best);
  }
  // 2048 samples on the image curve: the exact image points coincide with
  // samples because angles triple onto the lattice
  CHECK(worst < 1e-6);

  const auto pe = parameter_equipotential(std::log(2.0), 300);
  CHECK(pe.size() == 300);
  double sym = 0;
  for (cplx a2 : pe) {
    double best = 1e9;
    for (cplx b : pe) best = std::min(best, std::abs(std::conj(a2) - b));
    sym = std::max(sym, best);
  }
  CHECK(sym < 1e-9);
}

TEST_CASE("jsonl serialisation") {
  const auto ray = trace_dynamical_ray(1.0, RationalAngle(1, 3), 0.5);
  const auto s = ray_to_jsonl(ray);
  CHECK(s.find("\"angle_den\":3") != std::string::npos);
  CHECK(s.find("\"verdict\"") != std::string::npos);
}
