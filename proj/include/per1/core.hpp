#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "per1/errors.hpp"

namespace per1 {

using cplx = std::complex<double>;

inline constexpr double kSqrt3 = 1.7320508075688772935;
inline constexpr double kTwoPi = 6.283185307179586476925;

// f_a(z) = z^3 + a z^2 + z. Written in Horner form so that f_{-a}(-z) = -f_a(z)
// and f_{conj a}(conj z) = conj f_a(z) hold bit-for-bit.
inline cplx f(cplx a, cplx z) { return z * (z * (z + a) + 1.0); }
inline cplx df(cplx a, cplx z) { return z * (3.0 * z + 2.0 * a) + 1.0; }
// partial derivative in a
inline cplx dfa(cplx z) { return z * z; }

struct CubicMap {
  cplx a;
  cplx operator()(cplx z) const { return f(a, z); }
  cplx derivative(cplx z) const { return df(a, z); }
};

struct CriticalPair {
  cplx plus;
  cplx minus;
};

// Critical points labelled so that c_minus -> -1 as a -> 2 and c_plus stays on
// the boundary of the parabolic petal. The branch is continuous off the cut
// [-sqrt3, sqrt3]; on the cut the upper half-plane limit is used, and a = 0
// returns (+-i/sqrt3). With require_distinct, a = +-sqrt3 throws
// DegenerateParameter.
CriticalPair critical_points(cplx a, bool require_distinct = false);
CriticalPair critical_values(cplx a);

// max(floor, |a|^2); past this radius every orbit escapes monotonically.
double escape_radius(cplx a, double floor = 1e3);

struct EscapeVerdict {
  bool escaped = false;
  int n = 0;  // first index with |f^n z| > R_esc, valid when escaped
};

EscapeVerdict escape_classify(cplx a, cplx z, int max_iter, double floor = 1e3);

// Green function of the basin of infinity, 0 on bounded orbits.
double green_function(cplx a, cplx z, double tol = 1e-14, int max_iter = 100000,
                      double floor = 1e3);

// p/q in [0,1), reduced. Multiplication by 3 is exact modular arithmetic.
class RationalAngle {
 public:
  RationalAngle() = default;
  RationalAngle(std::int64_t num, std::int64_t den);
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  RationalAngle times3(int k = 1) const;
  RationalAngle times2(int k = 1) const;
  RationalAngle operator+(const RationalAngle& o) const;
  bool operator==(const RationalAngle& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator<(const RationalAngle& o) const;
  std::string str() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct Window {
  double re_min = -3, re_max = 3, im_min = -3, im_max = 3;
  bool contains(cplx z) const {
    return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min &&
           z.imag() <= im_max;
  }
  double area() const { return (re_max - re_min) * (im_max - im_min); }
};

// Parameters where the orbit of c_minus hits some target after n+1 steps.
// All of them are roots of a polynomial in the critical point c, with
// a = -(3c^2+1)/(2c).
enum class OrbitTarget {
  Zero,      // f^{n+1}(c-) = 0,  f^n(c-) != 0     (Misiurewicz-parabolic)
  CPlus,     // f^{n+1}(c-) = c+                   (capture centres)
  VPlus,     // f^{n+1}(c-) = v+
};

struct SolverBudget {
  double degree_area = 1.2e4;  // max polynomial degree * window area
  double newton_tol = 1e-10;
  double branch_tol = 1e-6;
};

std::vector<cplx> solve_critical_relation(OrbitTarget target, int n, const Window& w,
                                          const SolverBudget& budget = {});

inline std::vector<cplx> solve_misiurewicz_parabolic(int depth, const Window& w,
                                                     const SolverBudget& budget = {}) {
  return solve_critical_relation(OrbitTarget::Zero, depth, w, budget);
}

// |f^{n+1}(c-) - target| at a, evaluated with critical_points.
double critical_relation_residual(OrbitTarget target, int n, cplx a);

}  // namespace per1
