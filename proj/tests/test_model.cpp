#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "per1/model.hpp"

using namespace per1;

namespace {

cplx P(cplx z) { return z * z + 0.25; }

double distance_to(const Polyline& poly, cplx z) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const cplx p = poly[i], d = poly[i + 1] - p;
    const double u = std::clamp(std::real((z - p) * std::conj(d)) / std::norm(d), 0.0, 1.0);
    best = std::min(best, std::abs(z - p - u * d));
  }
  return best;
}

Polyline concat(const std::vector<Polyline>& parts) {
  Polyline out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

cplx orbit_point(cplx a, int n) {
  cplx z = critical_points(a).minus;
  for (int i = 0; i < n; ++i) z = f(a, z);
  return z;
}

}  // namespace

TEST_CASE("model Fatou coordinate") {
  CHECK(std::abs(model_fatou(0.25) - 1.0) < 1e-7);
  cplx z = 0;
  for (int n = 1; n <= 10; ++n) {
    z = P(z);
    CHECK(std::abs(model_fatou(z) - double(n)) < 1e-6);
  }
  CHECK(std::abs(model_petal_inverse(0.0)) < 1e-6);
  CHECK_THROWS_AS(model_fatou(1.0), DomainError);
}

TEST_CASE("model equipotentials") {
  const auto e0 = model_equipotential(0);
  REQUIRE(e0.size() == 2);
  for (const auto& arc : e0) {
    CHECK(arc.front() == cplx(0.25));
    CHECK(arc.back() == cplx(0.5));
    for (std::size_t i = 0; i + 1 < arc.size(); ++i)
      CHECK(std::abs(model_fatou(arc[i]).real() - 1.0) < 1e-8);
  }
  auto prev = e0;
  for (int n = 1; n <= 3; ++n) {
    const auto en = model_equipotential(n);
    CHECK(en.size() == (2u << n));
    const Polyline target = concat(prev);
    double worst = 0;
    for (const auto& arc : en)
      for (cplx z : arc) worst = std::max(worst, distance_to(target, P(z)));
    CHECK(worst < 1e-5);
    prev = en;
  }
  // E(1) is one closed curve: every arc leaves 0 and ends at +-1/2
  for (const auto& arc : model_equipotential(1)) {
    CHECK(arc.front() == cplx(0.0));
    CHECK(std::abs(std::abs(arc.back()) - 0.5) < 1e-12);
  }
  CHECK_THROWS_AS(model_equipotential(9), DomainError);
}

TEST_CASE("internal angles") {
  CHECK(InternalAngle::parse("1/3").l == 2);
  CHECK(InternalAngle::parse("-1/7").sign == -1);
  CHECK(InternalAngle::parse("6/7").sign == -1);
  CHECK(InternalAngle::parse("-1/7").rational() == RationalAngle(6, 7));
  CHECK(InternalAngle::parse("1/15").str() == "1/15");
  CHECK_THROWS_AS(InternalAngle::parse("1/5"), DomainError);
  CHECK_THROWS_AS(InternalAngle::parse("2/7"), DomainError);
  CHECK_THROWS_AS(InternalAngle::parse("1/1"), DomainError);
}

TEST_CASE("model internal ray 1/3") {
  const auto ray = model_internal_ray(InternalAngle::parse("1/3"), 8);
  REQUIRE(ray.links.size() == 9);
  double worst = 0;
  for (std::size_t n = 1; n < ray.links.size(); ++n)
    for (std::size_t j = 0; j < ray.links[n].size(); ++j)
      worst = std::max(worst, std::abs(P(P(ray.links[n][j])) - ray.links[n - 1][j]));
  CHECK(worst < 1e-6);
  // the tail approaches the upper period-2 point; P has multiplier 5 there
  CHECK(std::abs(ray.tail - cplx(-0.5, 1.0)) < 1e-3);
  CHECK(std::abs(model_fatou(ray.links[0].front()) - cplx(1, 1)) < 1e-9);

  const auto neg = model_internal_ray(InternalAngle::parse("-1/3"), 8);
  for (std::size_t n = 0; n < ray.links.size(); ++n)
    for (std::size_t j = 0; j < ray.links[n].size(); ++j)
      CHECK(std::abs(neg.links[n][j] - std::conj(ray.links[n][j])) < 1e-10);
}

TEST_CASE("model internal ray cycle is disjoint off the petal") {
  const auto& fc = model_coordinate();
  for (const char* s : {"1/3", "1/7", "-1/7"}) {
    const auto ray = model_internal_ray(InternalAngle::parse(s), 4);
    const int l = ray.angle.l;
    Polyline base;
    for (const auto& link : ray.links)
      for (cplx z : link)
        if (!fc.in_petal(z)) base.push_back(z);
    REQUIRE(base.size() > 50);
    std::vector<Polyline> images{base};
    for (int m = 1; m < l; ++m) {
      Polyline next;
      for (cplx z : images.back()) next.push_back(P(z));
      images.push_back(next);
    }
    double closest = 1e300;
    for (int i = 0; i < l; ++i)
      for (int j = i + 1; j < l; ++j)
        for (cplx z : images[i])
          for (cplx w : images[j]) closest = std::min(closest, std::abs(z - w));
    CHECK(closest > 1e-9);
  }
}

TEST_CASE("lifting to the model") {
  for (cplx a : {cplx(1.0), cplx(1.8), cplx(1.2, 0.5)}) {
    const auto l = lift_to_model(a, critical_values(a).plus);
    CHECK(std::abs(l.value - 0.25) < 1e-6);
    CHECK(l.k == 0);
  }
  // semi-conjugacy on random basin points, including long pull-backs
  const cplx a = 1.0;
  ConjugacyLifter lifter(a);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  int done = 0, deep = 0;
  while (done < 100) {
    const cplx z(u(rng), u(rng));
    if (!lifter.fatou().try_eval(z)) continue;
    const auto l0 = lifter.lift(z);
    const auto l1 = lifter.lift(f(a, z));
    CHECK(std::abs(l1.value - P(l0.value)) < 1e-6);
    CHECK(l0.sides.size() == std::size_t(l0.k));
    if (l0.k >= 3) ++deep;
    ++done;
  }
  CHECK(deep > 10);
  // the free critical point is on the minus side
  for (cplx b : {cplx(1.0), cplx(1.2, 0.5), cplx(0.5, 1.2)})
    CHECK(ConjugacyLifter(b).side(critical_points(b).minus) == Side::Minus);
  CHECK_THROWS_AS(lift_to_model(a, 3.0), DomainError);
}

TEST_CASE("Phi on the adjacent component") {
  CHECK(std::abs(phi_adjacent(kSqrt3) - 0.25) < 1e-6);
  for (double a : {1.75, 1.8, 1.9, 1.99}) {
    const cplx p = phi_adjacent(a);
    CHECK(std::abs(p.imag()) < 1e-8);
    CHECK(model_fatou(p).real() > 1.0);
  }
  // s0: the solution of v- = c+ in the first quadrant
  const auto s0 = solve_critical_relation(OrbitTarget::CPlus, 0, Window{0, 3, 0, 3});
  REQUIRE(s0.size() == 1);
  CHECK(std::abs(phi_adjacent(s0[0])) < 1e-6);
  CHECK_THROWS_AS(phi_adjacent(4.0), DomainError);
}

TEST_CASE("Phi on a capture component") {
  const auto centres = solve_critical_relation(OrbitTarget::CPlus, 1, Window{-0.1, 0.1, 1.5, 2.5});
  REQUIRE(centres.size() == 1);
  const cplx ac = centres[0];
  CHECK(std::abs(phi_capture(ac, 1)) < 1e-6);
  const cplx a = ac + cplx(0.01, 0.005);
  const cplx p = phi_capture(a, 1);
  CHECK(std::abs(P(p) - lift_to_model(a, orbit_point(a, 3)).value) < 1e-6);
  // local Lipschitz probe: difference quotients on both sides agree
  const double h = 1e-4;
  const double right = std::abs(phi_capture(a + h, 1) - p) / h;
  const double left = std::abs(phi_capture(a - h, 1) - p) / h;
  CHECK(right < 2 * left);
  CHECK(left < 2 * right);
  CHECK(std::abs(phi_capture(a + 1e-7, 1) - p) < 2e-7 * right);
  CHECK_THROWS_AS(phi_capture(1.0, 1), DomainError);
}

TEST_CASE("dynamical internal rays") {
  const auto model = model_internal_ray(InternalAngle::parse("1/3"), 5);
  const Polyline model_pts = concat(model.links);
  for (cplx a : {cplx(0, 3), cplx(1, 2), cplx(1, 0.3)}) {
    const auto ray = dynamical_internal_ray(a, InternalAngle::parse("1/3"), 5);
    double worst = 0;
    for (std::size_t n = 1; n < ray.links.size(); ++n)
      for (std::size_t j = 0; j < ray.links[n].size(); ++j)
        worst = std::max(worst, std::abs(f(a, f(a, ray.links[n][j])) - ray.links[n - 1][j]));
    CHECK(worst < 1e-6);
    // the lift carries the ray onto the model ray
    ConjugacyLifter lifter(a);
    double off = 0;
    int lifted = 0;
    for (const auto& link : ray.links)
      for (std::size_t j = 1; j < link.size(); j += 5) {
        try {
          off = std::max(off, distance_to(model_pts, lifter.lift(link[j]).value));
          ++lifted;
        } catch (const DomainError&) {
          // points on the figure eight
        }
      }
    CHECK(lifted > 100);
    CHECK(off < 1e-4);
  }
  // real parameter: conjugation exchanges the two angles
  const double a = 1.9;
  const auto r = dynamical_internal_ray(a, InternalAngle::parse("1/3"), 4);
  const auto s = dynamical_internal_ray(a, InternalAngle::parse("-1/3"), 4);
  for (std::size_t n = 0; n < r.links.size(); ++n)
    for (std::size_t j = 0; j < r.links[n].size(); ++j)
      CHECK(std::abs(std::conj(r.links[n][j]) - s.links[n][j]) < 1e-10);
}

TEST_CASE("gamma and E(0) in U0") {
  const auto g = parameter_gamma();
  CHECK(g.complete);
  CHECK(std::abs(g.points.front() - kSqrt3) < 5e-3);
  CHECK(std::abs(g.points.back() - 2.0) < 5e-3);
  for (std::size_t i = 1; i + 1 < g.points.size(); i += 5) {
    CHECK(g.points[i].imag() > 0);
    CHECK(std::abs(psi(g.points[i]).real() - 1.0) < 1e-8);
  }
  const auto e0 = parameter_e0_u0();
  REQUIRE(e0.size() == 2);
  CHECK(e0[0].points.front() == cplx(0.0));
  CHECK(e0[0].points.back() == cplx(kSqrt3));
}

TEST_CASE("E(1) and E(2) in U0") {
  const auto e1 = parameter_equipotential_u0(1);
  const auto e2 = parameter_equipotential_u0(2);
  REQUIRE(!e1.empty());
  REQUIRE(!e2.empty());
  for (const auto* set : {&e1, &e2})
    for (const auto& c : *set) {
      CHECK(c.complete);
      const double level = set == &e1 ? 0.0 : -1.0;
      for (std::size_t i = 1; i < c.points.size(); i += 7)
        CHECK(std::abs(psi(c.points[i]).real() - level) < 1e-8);
    }
  // disjoint away from the common boundary end points
  Polyline ends;
  for (const auto* set : {&e1, &e2})
    for (const auto& c : *set) ends.push_back(c.points.back());
  auto interior = [&](cplx z) {
    for (cplx e : ends)
      if (std::abs(z - e) < 0.05) return false;
    return true;
  };
  double closest = 1e300;
  for (const auto& c1 : e1)
    for (const auto& c2 : e2)
      for (cplx z : c1.points)
        if (interior(z)) closest = std::min(closest, distance_to(c2.points, z));
  CHECK(closest > 1e-6);
  // the end point 2 is the depth-0 Misiurewicz-parabolic parameter
  double to_two = 1e300;
  for (const auto& c : e1) to_two = std::min(to_two, std::abs(c.points.back() - 2.0));
  CHECK(to_two < 5e-3);
}

TEST_CASE("internal parameter rays in U0") {
  for (const char* s : {"1/3", "-1/3"}) {
    const auto theta = InternalAngle::parse(s);
    const auto ray = parameter_internal_ray_u0(theta, 1);
    REQUIRE(ray.complete);
    CHECK(std::abs(psi(ray.points.front()) - cplx(1, theta.sign)) < 1e-8);
    for (cplx a : ray.points) CHECK(a.imag() >= -1e-12);
    // the ray turns at the parameters where f^(2+2n)(c-) = c+
    for (int n = 0; n <= 1; ++n) {
      double best = 1e300;
      for (cplx r : solve_critical_relation(OrbitTarget::CPlus, 1 + 2 * n, Window{0, 3, 0, 3}))
        for (cplx a : ray.points) best = std::min(best, std::abs(a - r));
      CHECK(best < 1e-8);
    }
  }
}

TEST_CASE("capture component equipotential closes up") {
  const auto centres = solve_critical_relation(OrbitTarget::CPlus, 1, Window{-0.1, 0.1, 1.5, 2.5});
  REQUIRE(centres.size() == 1);
  const auto e = capture_equipotential(centres[0], 1);
  CHECK(e.complete);
  CHECK(std::abs(e.points.front() - e.points.back()) < 1e-3);
  for (std::size_t i = 0; i < e.points.size(); i += 5)
    CHECK(std::abs(psi_capture(e.points[i], 1).real() - 1.0) < 1e-8);
}

TEST_CASE("jsonl polylines") {
  const auto s = polylines_to_jsonl({{"E0", {cplx(0.25, 0), cplx(0.3, 0.1)}}});
  CHECK(s.find("\"curve_id\":\"E0\",\"seq\":1") != std::string::npos);
}
