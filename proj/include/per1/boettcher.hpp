#pragma once

#include <optional>
#include <string>
#include <vector>

#include "per1/core.hpp"

namespace per1 {

// Potentials are carried as g = log r so that rays can be followed down to
// r = 1 + 1e-200, which parabolic landings need.
struct PotentialSample {
  cplx point;
  double log_r;
};

enum class Quadrant { S, iS, mS, miS };
const char* quadrant_name(Quadrant q);
Quadrant parse_quadrant(const std::string& s);
bool in_quadrant(Quadrant q, cplx a, double tol = 0.0);

struct Landing {
  enum class Kind { Landed, Crashed, Truncated };
  Kind kind = Kind::Truncated;
  cplx point;         // extrapolated end point (also filled for Truncated)
  double confidence = 0;  // pairwise spread of the last 10 samples
  std::string reason;
};

struct RayTrace {
  RationalAngle angle;
  std::optional<Quadrant> quadrant;
  std::vector<PotentialSample> samples;
  Landing landing;
};

struct RayOptions {
  double tau = 1.1;
  int max_newton = 12;
  int max_halvings = 40;
  int max_steps = 200000;
  double escape_floor = 1e3;
  double land_spread = 1e-4;
  double land_log_r = 1e-6;
};

// Böttcher coordinate at infinity, phi(z) ~ z.
cplx boettcher(cplx a, cplx z, double floor = 1e3);

// Solve phi_a(z) = exp(g + 2 pi i t) by Newton from z0. Works at any depth g
// by iterating n times and matching phi(f^n z) against the 3^n-th power.
std::optional<cplx> solve_dynamical_point(cplx a, double g, const RationalAngle& t, cplx z0,
                                          int max_newton = 30, double floor = 1e3);
// Same in the parameter plane for Phi_inf(a) = exp(g + 2 pi i t).
std::optional<cplx> solve_parameter_point(double g, const RationalAngle& t, cplx a0,
                                          int max_newton = 30, double floor = 1e3);

RayTrace trace_dynamical_ray(cplx a, const RationalAngle& t, double log_rmin,
                             double log_rstart = 0, const RayOptions& opt = {});

// phi_a(v_-(a)). Evaluated from the series when that is unambiguous and by
// radial continuation in |a| otherwise.
cplx phi_infty(cplx a, double floor = 1e3);

// Seed parameter (27 r0 e^{2 pi i t}/4)^{1/3} in the quadrant; throws
// SeedEscapedQuadrant when no cube root lies there.
cplx parameter_ray_seed(Quadrant q, const RationalAngle& t, double log_r0);

RayTrace trace_parameter_ray(Quadrant q, const RationalAngle& t, double log_rmin,
                             const RayOptions& opt = {}, double log_r0 = 13.815510557964274);

// Closed curves of constant potential, n points, uniform in external angle.
std::vector<cplx> dynamical_equipotential(cplx a, double log_r, int n);
// The parameter curve winds three times in angle; n points over the full curve.
std::vector<cplx> parameter_equipotential(double log_r, int n);

// Root of f^n(x) = 0 reached by Newton from z, if it lies within max_dist.
// Rays landing on preimages of the parabolic point converge only like
// 1/log(1/g); this replaces the extrapolated end point by the exact preimage.
std::optional<cplx> snap_to_zero_preimage(cplx a, cplx z, int n, double max_dist);

// One JSON object per line: every sample, then a verdict record.
std::string ray_to_jsonl(const RayTrace& ray);

}  // namespace per1
