#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "per1/fatou.hpp"

using namespace per1;

namespace {

// Leading-order limit w_N - N - A Log w_N after many plain iterations. Slow,
// accurate to O(log N / N), and free of the asymptotic series.
cplx crude_fatou(cplx a, cplx z, int N) {
  for (int n = 0; n < N; ++n) z = f(a, z);
  const cplx w = -1.0 / (a * z);
  return w - static_cast<double>(N) - (1.0 - 1.0 / (a * a)) * std::log(w);
}

std::vector<cplx> basin_samples(const FatouCoordinate& fc, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<cplx> out;
  while (static_cast<int>(out.size()) < count) {
    const cplx z(u(rng), u(rng));
    if (fc.try_eval(z)) out.push_back(z);
  }
  return out;
}

}  // namespace

TEST_CASE("drift constant and normalisation") {
  const FatouCoordinate fc(cplx(0.5, 1.5));
  CHECK(std::abs(fc.drift() - (1.0 - 1.0 / (cplx(0.5, 1.5) * cplx(0.5, 1.5)))) < 1e-15);
  const FatouCoordinate one(1.0);
  const auto v = critical_values(1.0);
  CHECK(std::abs(one(v.plus) - 1.0) < 1e-6);
  CHECK(std::abs(one(critical_points(1.0).plus)) < 1e-6);
  CHECK(std::abs(one(f(1.0, v.plus)) - one(v.plus) - 1.0) < 1e-9);
  CHECK_THROWS_AS(one(10.0), DomainError);
  CHECK_THROWS_AS(FatouCoordinate(0.0), DomainError);
  const auto P = FatouCoordinate::model();
  CHECK(std::abs(P(0.0)) < 1e-12);
  CHECK(std::abs(P(0.25) - 1.0) < 1e-9);
}

TEST_CASE("Abel equation on basin samples") {
  for (cplx a : {cplx(1.0), cplx(0, 2), cplx(0.5, 1.5)}) {
    const FatouCoordinate fc(a);
    double worst = 0;
    for (cplx z : basin_samples(fc, 1000, 3)) {
      const auto u = fc.try_eval(z), v = fc.try_eval(f(a, z));
      REQUIRE(u.has_value());
      REQUIRE(v.has_value());
      worst = std::max(worst, std::abs(*v - *u - 1.0));
    }
    CHECK(worst < 1e-8);
  }
  const auto P = FatouCoordinate::model();
  double worst = 0;
  for (cplx z : basin_samples(P, 1000, 4))
    worst = std::max(worst, std::abs(P(P.map(z)) - P(z) - 1.0));
  CHECK(worst < 1e-8);
}

TEST_CASE("agreement with the leading-order limit") {
  for (cplx a : {cplx(1.0), cplx(0.5, 1.5)}) {
    const FatouCoordinate fc(a);
    const cplx z = critical_values(a).plus;
    CHECK(std::abs(fc(z) - (crude_fatou(a, z, 2000000) - fc.sigma())) < 1e-4);
  }
}

TEST_CASE("budget independence") {
  FatouPolicy big;
  big.sector_w0 = 40;
  big.series_terms = 30;
  for (cplx a : {cplx(1.0), cplx(0.5, 1.5), cplx(0.3)}) {
    const FatouCoordinate lo(a), hi(a, big);
    for (cplx z : basin_samples(lo, 50, 9)) CHECK(std::abs(lo(z) - hi(z)) < 1e-9);
  }
}

TEST_CASE("petal inverse") {
  const cplx a = 1.0;
  const FatouCoordinate fc(a);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> re(0, 5), im(-5, 5);
  for (int i = 0; i < 100; ++i) {
    const cplx W(re(rng), im(rng));
    const cplx z = fc.petal_inverse(W);
    CHECK(std::abs(fc(z) - W) < 1e-7);
    CHECK(std::abs(f(a, z) - fc.petal_inverse(W + 1.0)) < 1e-7);
  }
  CHECK(std::abs(fc.petal_inverse(0.0) - critical_points(a).plus) < 1e-5);
}

TEST_CASE("maximal petal membership") {
  const FatouCoordinate fc(1.0);
  std::string why;
  CHECK(fc.in_petal(critical_values(1.0).plus, &why));
  CHECK(!fc.in_petal(critical_points(1.0).plus, &why));
  CHECK(!fc.in_petal(10.0, &why));
  CHECK(why == "not in the parabolic basin");
  // the petal of a real map is symmetric, so v- = conj v+ lies in it as well
  CHECK(fc.in_petal(critical_values(1.0).minus));
}

TEST_CASE("capture depth") {
  CHECK(capture_depth(1.0, 3).kind == CaptureVerdict::Kind::Adjacent);
  CHECK(capture_depth(4.0, 3).kind == CaptureVerdict::Kind::Escape);
  // centres where f^2(c-) = c+; the one on the imaginary axis is captured
  // after exactly two steps, the others are centres inside adjacent ones
  const auto centres = solve_critical_relation(OrbitTarget::CPlus, 1, Window{0, 3, 0, 3});
  int captured = 0;
  for (cplx a : centres) {
    const auto v = capture_depth(a, 3);
    CHECK(v.kind != CaptureVerdict::Kind::Undetermined);
    CHECK(v.kind != CaptureVerdict::Kind::Escape);
    if (v.kind == CaptureVerdict::Kind::Capture) {
      CHECK(v.n == 1);
      ++captured;
    }
    // refinement never changes a decided verdict
    for (int n : {128, 256, 512}) {
      CapturePolicy p;
      p.ladder = {n};
      const auto w = capture_depth(a, 3, p);
      CHECK(w.kind == v.kind);
      CHECK(w.n == v.n);
    }
  }
  CHECK(captured >= 1);
}

TEST_CASE("the invariant I on the real segment") {
  CHECK(i_invariant(kSqrt3).value < 1e-8);
  const auto one = i_invariant(1.0);
  CHECK(one.value > 0);
  CHECK(std::abs(one.re_diagnostic) < 1e-6);
  double prev = 1e300;
  for (int k = 1; k <= 5; ++k) {
    const double I = i_invariant(0.3 * k).value;
    CHECK(I < prev);  // decreasing toward sqrt3
    prev = I;
  }
  for (cplx a : {cplx(1.2, 0.3), cplx(0.8, -0.5)})
    CHECK(std::abs(i_invariant(a).value - i_invariant(std::conj(a)).value) < 1e-9);
}
