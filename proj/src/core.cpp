#include "per1/core.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace per1 {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DegenerateParameter: return "DegenerateParameter";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::NotEscaping: return "NotEscaping";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::NotInHInfinity: return "NotInHInfinity";
    case ErrorCode::SeedEscapedQuadrant: return "SeedEscapedQuadrant";
    case ErrorCode::NotInBasin: return "NotInBasin";
    case ErrorCode::InverseBranchLost: return "InverseBranchLost";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::SideUndecided: return "SideUndecided";
    case ErrorCode::OrbitBudget: return "OrbitBudget";
    case ErrorCode::NotAdjacent: return "NotAdjacent";
    case ErrorCode::WrongDepth: return "WrongDepth";
    case ErrorCode::RayHitsCriticalValue: return "RayHitsCriticalValue";
    case ErrorCode::ContinuationStalled: return "ContinuationStalled";
    case ErrorCode::RayCrash: return "RayCrash";
    case ErrorCode::ObstructedInternalRay: return "ObstructedInternalRay";
    case ErrorCode::ArrangementDegenerate: return "ArrangementDegenerate";
    case ErrorCode::NotALandingVertex: return "NotALandingVertex";
    case ErrorCode::MissingComponentData: return "MissingComponentData";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

// s(a) = a sqrt(1 - 3/a^2). 3/a^2 is formed as 3 conj(a^2)/|a^2|^2 so the
// result is exactly odd and conjugation-equivariant.
cplx split(cplx a) {
  const cplx a2 = a * a;
  const double n = std::norm(a2);
  if (n == 0.0) return cplx(0.0, kSqrt3);
  const cplx inv = 3.0 * std::conj(a2) / n;
  cplx s = a * std::sqrt(1.0 - inv);
  // On the open cut sqrt sees a negative real and the sign of s would follow
  // the sign of a; take the upper half-plane limit instead.
  if (a.imag() == 0.0 && std::abs(a.real()) < kSqrt3) s = cplx(0.0, std::abs(s.imag()));
  return s;
}

}  // namespace

CriticalPair critical_points(cplx a, bool require_distinct) {
  if (require_distinct && a.imag() == 0.0 && std::abs(std::abs(a.real()) - kSqrt3) < 1e-15)
    fail(ErrorCode::DegenerateParameter, "critical points coincide at a = +-sqrt3");
  const cplx s = split(a);
  return {(-a + s) / 3.0, (-a - s) / 3.0};
}

CriticalPair critical_values(cplx a) {
  const auto c = critical_points(a);
  return {f(a, c.plus), f(a, c.minus)};
}

double escape_radius(cplx a, double floor) { return std::max(floor, std::norm(a)); }

EscapeVerdict escape_classify(cplx a, cplx z, int max_iter, double floor) {
  const double r2 = escape_radius(a, floor) * escape_radius(a, floor);
  for (int n = 0; n <= max_iter; ++n) {
    if (std::norm(z) > r2) {
      const cplx w = f(a, z);
      if (std::norm(w) > std::norm(z)) return {true, n};
    }
    z = f(a, z);
  }
  return {};
}

double green_function(cplx a, cplx z, double tol, int max_iter, double floor) {
  if (!(tol > 0)) fail(ErrorCode::InvalidArgument, "green_function needs tol > 0");
  const double big = escape_radius(a, floor);
  int n = 0;
  while (std::abs(z) <= big) {
    if (n >= max_iter) return 0.0;
    z = f(a, z);
    ++n;
    if (!std::isfinite(z.real()))
      fail(ErrorCode::BudgetExceeded, "orbit overflowed before reaching the escape radius");
  }
  // log|f^n z| / 3^n plus the tail of the product form.
  double scale = std::pow(3.0, -n);
  double g = scale * std::log(std::abs(z));
  for (int k = 0; k < 200; ++k) {
    const cplx u = a / z + 1.0 / (z * z);
    const double term = scale / 3.0 * std::log(std::abs(1.0 + u));
    g += term;
    if (std::abs(term) < tol * 1e-3 || std::abs(u) < 1e-300) return g;
    z = f(a, z);
    scale /= 3.0;
    if (!std::isfinite(z.real())) return g;
  }
  fail(ErrorCode::BudgetExceeded, "green tail did not converge");
}

RationalAngle::RationalAngle(std::int64_t num, std::int64_t den) {
  if (den <= 0) fail(ErrorCode::InvalidArgument, "angle denominator must be positive");
  num %= den;
  if (num < 0) num += den;
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

RationalAngle RationalAngle::times3(int k) const {
  __int128 n = num_;
  for (int i = 0; i < k; ++i) n = (n * 3) % den_;
  return RationalAngle(static_cast<std::int64_t>(n), den_);
}

RationalAngle RationalAngle::times2(int k) const {
  __int128 n = num_;
  for (int i = 0; i < k; ++i) n = (n * 2) % den_;
  return RationalAngle(static_cast<std::int64_t>(n), den_);
}

RationalAngle RationalAngle::operator+(const RationalAngle& o) const {
  const std::int64_t g = std::gcd(den_, o.den_);
  const __int128 den = static_cast<__int128>(den_ / g) * o.den_;
  const __int128 num = static_cast<__int128>(num_) * (o.den_ / g) +
                       static_cast<__int128>(o.num_) * (den_ / g);
  return RationalAngle(static_cast<std::int64_t>(num % den), static_cast<std::int64_t>(den));
}

bool RationalAngle::operator<(const RationalAngle& o) const {
  return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
}

std::string RationalAngle::str() const {
  return std::to_string(num_) + "/" + std::to_string(den_);
}

// ---------------------------------------------------------------------------
// Critical relations. With c the critical point that starts the orbit,
// a = -(3c^2+1)/(2c) and every iterate f^k(c) is a polynomial in c with real
// coefficients (f(c) = c(1-c^2)/2, and a * p is polynomial whenever c | p).

namespace {

using Poly = std::vector<double>;  // coefficient i multiplies c^i

Poly mul(const Poly& p, const Poly& q) {
  Poly r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != 0.0)
      for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

Poly add(Poly p, const Poly& q) {
  if (q.size() > p.size()) p.resize(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) p[i] += q[i];
  return p;
}

Poly scale(Poly p, double s) {
  for (auto& x : p) x *= s;
  return p;
}

// a * p for p divisible by c
Poly times_a(const Poly& p) {
  Poly q(p.begin() + 1, p.end());
  return scale(mul(q, Poly{1.0, 0.0, 3.0}), -0.5);
}

Poly iterate_poly(int k) {
  Poly z{0.0, 1.0};
  for (int i = 0; i < k; ++i) {
    const Poly az = times_a(z);
    z = mul(z, add(add(mul(z, z), az), Poly{1.0}));
  }
  return z;
}

std::vector<cplx> poly_roots(Poly p) {
  while (!p.empty() && std::abs(p.back()) < 1e-300) p.pop_back();
  // drop roots at c = 0, they correspond to a = infinity
  std::size_t lead = 0;
  while (lead < p.size() && p[lead] == 0.0) ++lead;
  p.erase(p.begin(), p.begin() + static_cast<long>(lead));
  const int d = static_cast<int>(p.size()) - 1;
  if (d < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -p[i] / p[d];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<cplx> out;
  for (int i = 0; i < d; ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

cplx a_of_c(cplx c) { return -(3.0 * c * c + 1.0) / (2.0 * c); }

// F(c) = f^{n+1}(c) - target(c) together with dF/dc.
cplx relation(OrbitTarget t, int n, cplx c, cplx* dF) {
  const cplx a = a_of_c(c);
  const cplx da = (1.0 - 3.0 * c * c) / (2.0 * c * c);
  cplx z = c, dz = 1.0;
  for (int k = 0; k < n + 1; ++k) {
    dz = df(a, z) * dz + z * z * da;
    z = f(a, z);
  }
  cplx g = 0.0, dg = 0.0;
  if (t == OrbitTarget::CPlus) {
    g = 1.0 / (3.0 * c);
    dg = -1.0 / (3.0 * c * c);
  } else if (t == OrbitTarget::VPlus) {
    const cplx cp = 1.0 / (3.0 * c);
    g = f(a, cp);
    dg = cp * cp * da;
  }
  *dF = dz - dg;
  return z - g;
}

}  // namespace

double critical_relation_residual(OrbitTarget t, int n, cplx a) {
  const auto cp = critical_points(a);
  cplx z = cp.minus;
  for (int k = 0; k < n + 1; ++k) z = f(a, z);
  cplx g = 0.0;
  if (t == OrbitTarget::CPlus) g = cp.plus;
  if (t == OrbitTarget::VPlus) g = f(a, cp.plus);
  return std::abs(z - g);
}

std::vector<cplx> solve_critical_relation(OrbitTarget target, int n, const Window& w,
                                          const SolverBudget& budget) {
  if (n < 0 || n > 6) fail(ErrorCode::InvalidArgument, "depth must lie in [0, 6]");
  Poly P;
  const Poly zn1 = iterate_poly(n + 1);
  if (target == OrbitTarget::Zero) {
    const Poly zn = iterate_poly(n);
    P = add(add(mul(zn, zn), times_a(zn)), Poly{1.0});
  } else if (target == OrbitTarget::CPlus) {
    P = add(mul(Poly{0.0, 3.0}, zn1), Poly{-1.0});
  } else {
    P = add(mul(Poly{0.0, 0.0, 0.0, 54.0}, zn1), Poly{1.0, 0.0, -9.0});
  }
  const double degree = static_cast<double>(P.size() - 1);
  if (degree * w.area() > budget.degree_area)
    fail(ErrorCode::WindowTooLarge, "degree " + std::to_string(static_cast<int>(degree)) +
                                        " times window area exceeds the solver budget");

  std::vector<cplx> found;
  for (cplx c : poly_roots(P)) {
    if (std::abs(c) < 1e-12) continue;
    for (int it = 0; it < 60; ++it) {
      cplx d;
      const cplx F = relation(target, n, c, &d);
      if (d == 0.0) break;
      const cplx step = F / d;
      c -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(c))) break;
    }
    if (!std::isfinite(c.real()) || std::abs(c) < 1e-12) continue;
    const cplx a = a_of_c(c);
    if (!w.contains(a)) continue;
    const auto cp = critical_points(a);
    if (std::abs(c - cp.minus) > budget.branch_tol) continue;
    if (critical_relation_residual(target, n, a) > budget.newton_tol) continue;
    if (target == OrbitTarget::Zero) {
      cplx z = cp.minus;
      for (int k = 0; k < n; ++k) z = f(a, z);
      if (std::abs(z) < 1e-4) continue;
    }
    bool dup = false;
    for (cplx b : found) dup = dup || std::abs(a - b) < 1e-8;
    if (!dup) found.push_back(a);
  }
  std::sort(found.begin(), found.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return found;
}

}  // namespace per1
