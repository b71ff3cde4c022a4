#include "per1/boettcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace per1 {

const char* quadrant_name(Quadrant q) {
  switch (q) {
    case Quadrant::S: return "S";
    case Quadrant::iS: return "iS";
    case Quadrant::mS: return "-S";
    case Quadrant::miS: return "-iS";
  }
  return "?";
}

Quadrant parse_quadrant(const std::string& s) {
  if (s == "S") return Quadrant::S;
  if (s == "iS") return Quadrant::iS;
  if (s == "-S" || s == "mS") return Quadrant::mS;
  if (s == "-iS" || s == "miS") return Quadrant::miS;
  fail(ErrorCode::InvalidArgument, "unknown quadrant '" + s + "'");
}

bool in_quadrant(Quadrant q, cplx a, double tol) {
  const double x = a.real(), y = a.imag();
  switch (q) {
    case Quadrant::S: return x >= -tol && y >= -tol;
    case Quadrant::iS: return x <= tol && y >= -tol;
    case Quadrant::mS: return x <= tol && y <= tol;
    case Quadrant::miS: return x >= -tol && y <= tol;
  }
  return false;
}

namespace {

struct PhiEval {
  cplx phi;
  cplx dphi;
};

// phi_a(w) = w exp(sum 3^{-(k+1)} Log(1 + a/w_k + 1/w_k^2)) with the derivative
// along a variable x, where dw = dw/dx and `param` says whether a = x.
// Returns false if some |a/w_k + 1/w_k^2| reaches `safety`.
bool phi_series(cplx a, cplx w, cplx dw, bool param, double safety, PhiEval* out) {
  cplx S = 0.0, dS = 0.0;
  double scale = 1.0 / 3.0;
  cplx wk = w, dwk = dw;
  for (int k = 0; k < 400; ++k) {
    const cplx iw = 1.0 / wk;
    const cplx u = iw * (a + iw);
    if (!(std::abs(u) < safety)) return false;
    const cplx h = 1.0 + u;
    cplx du = -(iw * iw) * (a + 2.0 * iw) * dwk;
    if (param) du += iw;
    S += scale * std::log(h);
    dS += scale * du / h;
    if (std::abs(u) < 1e-18 || std::abs(wk) > 1e100) break;
    dwk = df(a, wk) * dwk + (param ? wk * wk : cplx(0.0));
    wk = f(a, wk);
    scale /= 3.0;
  }
  const cplx e = std::exp(S);
  out->phi = w * e;
  out->dphi = e * dw + out->phi * dS;
  return true;
}

// number of iterates needed before potential 3^n g clears the escape radius
int depth_for(double g, double radius) {
  const double h = std::log(radius) + 1.0;
  if (g >= h) return 0;
  return static_cast<int>(std::ceil(std::log(h / g) / std::log(3.0)));
}

// exp(-(G + 2 pi i s)) with G = 3^n g and s = 3^n t mod 1
cplx inverse_target(double g, const RationalAngle& t, int n) {
  const double G = g * std::pow(3.0, n);
  const double s = t.times3(n).value();
  return std::polar(std::exp(-G), -kTwoPi * s);
}

}  // namespace

cplx boettcher(cplx a, cplx z, double floor) {
  const double r = escape_radius(a, floor);
  cplx w = z;
  int n = 0;
  while (std::abs(w) <= r) {
    if (++n > 100000) fail(ErrorCode::NotEscaping, "orbit did not escape");
    w = f(a, w);
  }
  PhiEval e;
  if (!phi_series(a, z, 1.0, false, 1.0, &e))
    fail(ErrorCode::BranchAmbiguity, "orbit leaves the principal-log safety disk");
  return e.phi;
}

std::optional<cplx> solve_dynamical_point(cplx a, double g, const RationalAngle& t, cplx z0,
                                          int max_newton, double floor) {
  const int n = depth_for(g, escape_radius(a, floor));
  const cplx inv = inverse_target(g, t, n);
  cplx z = z0;
  double last = 1.0;
  for (int it = 0; it < max_newton; ++it) {
    cplx w = z, dw = 1.0;
    for (int k = 0; k < n; ++k) {
      dw = df(a, w) * dw;
      w = f(a, w);
    }
    PhiEval e;
    if (!std::isfinite(w.real()) || !phi_series(a, w, dw, false, 0.5, &e)) return std::nullopt;
    const cplx F = e.phi * inv - 1.0;
    const cplx dF = e.dphi * inv;
    if (dF == 0.0) return std::nullopt;
    const cplx step = F / dF;
    z -= step;
    // near critical points the residual has a noise floor; a stalled step is
    // the convergence signal there
    if (std::abs(F) < 1e-14 || std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) return z;
    last = std::abs(step) / std::max(1.0, std::abs(z));
  }
  if (last < 1e-12) return z;
  return std::nullopt;
}

std::optional<cplx> solve_parameter_point(double g, const RationalAngle& t, cplx a0,
                                          int max_newton, double floor) {
  const int n = depth_for(g, escape_radius(a0, floor));
  const cplx inv = inverse_target(g, t, n);
  cplx a = a0;
  double last = 1.0;
  for (int it = 0; it < max_newton; ++it) {
    const cplx c = critical_points(a).minus;
    cplx w = f(a, c), dw = c * c;
    for (int k = 0; k < n; ++k) {
      dw = df(a, w) * dw + w * w;
      w = f(a, w);
    }
    PhiEval e;
    if (!std::isfinite(w.real()) || !phi_series(a, w, dw, true, 0.5, &e)) return std::nullopt;
    const cplx F = e.phi * inv - 1.0;
    const cplx dF = e.dphi * inv;
    if (dF == 0.0) return std::nullopt;
    const cplx step = F / dF;
    a -= step;
    // near critical points the residual has a noise floor; a stalled step is
    // the convergence signal there
    if (std::abs(F) < 1e-14 || std::abs(step) < 1e-14 * std::max(1.0, std::abs(a))) return a;
    last = std::abs(step) / std::max(1.0, std::abs(a));
  }
  if (last < 1e-12) return a;
  return std::nullopt;
}

namespace {

// Tail model z = z* + C L^{-p}, L = log(1/g). Parabolic landings give p = 1
// (or 1/2 at the degenerate parameter 0); repelling ones look like huge p.
// Samples at L, L/2, L/4 fix p = log2 of the ratio of successive gaps.
cplx extrapolate_landing(const std::vector<PotentialSample>& s) {
  const double L3 = std::log(1.0 / s.back().log_r);
  auto nearest = [&](double L) {
    std::size_t best = s.size() - 1;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i].log_r < 1.0 &&
          std::abs(std::log(1.0 / s[i].log_r) - L) < std::abs(std::log(1.0 / s[best].log_r) - L))
        best = i;
    return best;
  };
  const auto i1 = nearest(L3 / 4), i2 = nearest(L3 / 2);
  if (i1 >= i2 || i2 >= s.size() - 1) return s.back().point;
  const double La = std::log(1.0 / s[i1].log_r), Lb = std::log(1.0 / s[i2].log_r);
  const cplx z1 = s[i1].point, z2 = s[i2].point, z3 = s.back().point;
  const double g12 = std::abs(z2 - z1), g23 = std::abs(z3 - z2);
  double p = 1.0;
  if (g23 == 0.0 || g12 > 256.0 * g23) return z3;
  if (g12 > g23) p = std::log(g12 / g23) / std::log((Lb / La + L3 / Lb) / 2.0);
  p = std::clamp(p, 0.25, 8.0);
  const double u2 = std::pow(Lb, -p), u3 = std::pow(L3, -p);
  return z3 + (z3 - z2) * (u3 / (u2 - u3));
}

template <class Solve, class Valid>
void continue_ray(RayTrace& ray, double g_min, Solve solve, Valid valid, const RayOptions& opt) {
  auto& s = ray.samples;
  double ratio = opt.tau;
  int halvings = 0;
  int steps = 0;
  while (s.back().log_r > g_min) {
    if (++steps > opt.max_steps) {
      ray.landing.kind = Landing::Kind::Truncated;
      ray.landing.reason = "step budget exhausted";
      break;
    }
    const double g1 = s.back().log_r;
    const double gt = std::max(g1 / ratio, g_min);
    const cplx x1 = s.back().point;
    cplx pred = x1;
    double prev_step = 0;
    if (s.size() >= 2) {
      const auto& p0 = s[s.size() - 2];
      prev_step = std::abs(x1 - p0.point);
      pred = x1 + (x1 - p0.point) * (std::log(gt / g1) / std::log(g1 / p0.log_r));
    }
    auto r = solve(gt, pred);
    bool ok = r.has_value() && valid(*r);
    if (ok && s.size() >= 2) ok = std::abs(*r - pred) <= 0.5 * prev_step + 1e-10 * std::max(1.0, std::abs(x1));
    if (!ok) {
      ratio = std::sqrt(ratio);
      if (++halvings > opt.max_halvings) {
        if (g1 <= opt.land_log_r && s.size() >= 10) {
          // a converged tail that runs out of double precision has landed
          double spread = 0;
          for (std::size_t i = s.size() - 10; i < s.size(); ++i)
            spread = std::max(spread, std::abs(s[i].point - x1));
          if (spread < 1e-2 * opt.land_spread) {
            ray.landing = {Landing::Kind::Landed, x1, spread, ""};
            return;
          }
        }
        ray.landing.kind = Landing::Kind::Crashed;
        char buf[160];
        std::snprintf(buf, sizeof buf, "continuation stalled at log r = %.3e near (%.6g, %.6g)",
                      g1, x1.real(), x1.imag());
        ray.landing.reason = buf;
        ray.landing.point = x1;
        return;
      }
      continue;
    }
    s.push_back({*r, gt});
    halvings = 0;
    ratio = std::min(opt.tau, ratio * ratio);
  }
  // landing verdict
  const std::size_t m = std::min<std::size_t>(10, s.size());
  double spread = 0;
  for (std::size_t i = s.size() - m; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      spread = std::max(spread, std::abs(s[i].point - s[j].point));
  ray.landing.confidence = spread;
  ray.landing.point = s.back().point;
  if (s.size() >= 3 && s.back().log_r < 1e-3) ray.landing.point = extrapolate_landing(s);
  if (ray.landing.reason.empty()) {
    const bool deep = s.back().log_r <= opt.land_log_r;
    ray.landing.kind = (deep && spread < opt.land_spread && m == 10) ? Landing::Kind::Landed
                                                                     : Landing::Kind::Truncated;
    if (ray.landing.kind == Landing::Kind::Truncated)
      ray.landing.reason = deep ? "tail spread above threshold" : "r_min above landing threshold";
  }
}

}  // namespace

RayTrace trace_dynamical_ray(cplx a, const RationalAngle& t, double log_rmin, double log_rstart,
                             const RayOptions& opt) {
  if (!(log_rmin > 0)) fail(ErrorCode::InvalidArgument, "r_min must exceed 1");
  const double g_top = std::log(escape_radius(a, opt.escape_floor)) + 2.0;
  const double g0 = std::max(log_rstart, g_top);
  RayTrace ray;
  ray.angle = t;
  const cplx guess = std::polar(std::exp(g0), kTwoPi * t.value()) - a / 3.0;
  auto z0 = solve_dynamical_point(a, g0, t, guess, 50, opt.escape_floor);
  if (!z0) fail(ErrorCode::RayCrash, "ray seed did not converge");
  ray.samples.push_back({*z0, g0});
  auto solve = [&](double g, cplx x) {
    return solve_dynamical_point(a, g, t, x, opt.max_newton, opt.escape_floor);
  };
  continue_ray(ray, log_rmin, solve, [](cplx) { return true; }, opt);
  // samples above the requested start are continuation scaffolding
  if (log_rstart > 0 && log_rstart < g0) {
    std::vector<PotentialSample> kept;
    for (const auto& p : ray.samples)
      if (p.log_r <= log_rstart) kept.push_back(p);
    if (kept.size() >= 2) ray.samples = kept;
  }
  return ray;
}

namespace {

// phi_a(v_-) by the series when every |u_k| < 1/2 starting at v_-.
std::optional<cplx> phi_infty_direct(cplx a) {
  const cplx v = critical_values(a).minus;
  PhiEval e;
  if (phi_series(a, v, 1.0, false, 0.5, &e)) return e.phi;
  return std::nullopt;
}

// phi_a(f^n v_-)^{1/3^n}, the root nearest `hint`.
std::optional<cplx> phi_infty_root(cplx a, cplx hint, double floor, double* separation) {
  const double R = escape_radius(a, floor);
  cplx w = critical_values(a).minus;
  int n = 0;
  while (std::abs(w) < R) {
    w = f(a, w);
    if (++n > 10000) return std::nullopt;
  }
  PhiEval e;
  if (!phi_series(a, w, 1.0, false, 0.5, &e)) return std::nullopt;
  const double p = std::pow(3.0, n);
  const double mod = std::exp(std::log(std::abs(e.phi)) / p);
  const double arg0 = std::arg(e.phi) / p;
  const double spacing = kTwoPi / p;
  // choose k so that arg0 + k spacing is nearest to arg(hint)
  const double k = std::round(std::remainder(std::arg(hint) - arg0, kTwoPi) / spacing);
  *separation = spacing;
  return std::polar(mod, arg0 + k * spacing);
}

}  // namespace

cplx phi_infty(cplx a, double floor) {
  const cplx c = critical_points(a).minus;
  if (!escape_classify(a, c, 100000, floor).escaped)
    fail(ErrorCode::NotInHInfinity, "critical point c- does not escape");
  if (auto d = phi_infty_direct(a)) return *d;
  // radial continuation from a modulus where the series is safe
  double rho = std::abs(a);
  std::optional<cplx> start;
  while (!start) {
    rho *= 1.25;
    start = phi_infty_direct(a * (rho / std::abs(a)));
    if (rho > 1e6) fail(ErrorCode::NotInHInfinity, "no safe starting modulus");
  }
  cplx value = *start;
  double cur = rho;
  double step = 0.02 * rho;
  while (cur > std::abs(a)) {
    const double next = std::max(std::abs(a), cur - step);
    const cplx b = a * (next / std::abs(a));
    if (!escape_classify(b, critical_points(b).minus, 100000, floor).escaped)
      fail(ErrorCode::NotInHInfinity, "radial continuation path leaves H_inf");
    double sep = 0;
    auto r = phi_infty_root(b, value, floor, &sep);
    if (!r) fail(ErrorCode::NotInHInfinity, "continuation lost the escaping orbit");
    // demand the move in argument be well under half the branch spacing
    const double moved = std::abs(std::remainder(std::arg(*r) - std::arg(value), kTwoPi));
    if (moved > 0.2 * sep && step > 1e-9) {
      step *= 0.5;
      continue;
    }
    value = *r;
    cur = next;
    step = std::min(step * 1.5, 0.05 * cur);
  }
  return value;
}

cplx parameter_ray_seed(Quadrant q, const RationalAngle& t, double log_r0) {
  const double mod = std::cbrt(27.0 * std::exp(log_r0) / 4.0);
  for (int k = 0; k < 3; ++k) {
    const cplx a = std::polar(mod, (kTwoPi * t.value() + kTwoPi * k) / 3.0);
    // snap the exact axis cases so that symmetric rays stay on the axis
    cplx s = a;
    if (std::abs(s.imag()) < 1e-12 * mod) s.imag(0.0);
    if (std::abs(s.real()) < 1e-12 * mod) s.real(0.0);
    if (in_quadrant(q, s)) return s;
  }
  fail(ErrorCode::SeedEscapedQuadrant,
       "angle " + t.str() + " has no seed branch in quadrant " + quadrant_name(q));
}

RayTrace trace_parameter_ray(Quadrant q, const RationalAngle& t, double log_rmin,
                             const RayOptions& opt, double log_r0) {
  if (!(log_rmin > 0)) fail(ErrorCode::InvalidArgument, "r_min must exceed 1");
  RayTrace ray;
  ray.angle = t;
  ray.quadrant = q;
  const cplx seed = parameter_ray_seed(q, t, log_r0);
  auto a0 = solve_parameter_point(log_r0, t, seed, 50, opt.escape_floor);
  if (!a0 || !in_quadrant(q, *a0, 1e-9 * std::abs(*a0)))
    fail(ErrorCode::SeedEscapedQuadrant, "seed polish left the quadrant");
  ray.samples.push_back({*a0, log_r0});
  auto solve = [&](double g, cplx x) {
    return solve_parameter_point(g, t, x, opt.max_newton, opt.escape_floor);
  };
  auto valid = [&](cplx a) { return in_quadrant(q, a, 1e-9 * std::max(1.0, std::abs(a))); };
  continue_ray(ray, log_rmin, solve, valid, opt);
  if (ray.landing.kind == Landing::Kind::Crashed && ray.samples.size() < 3)
    fail(ErrorCode::SeedEscapedQuadrant, "continuation left the quadrant: " + ray.landing.reason);
  return ray;
}

namespace {

template <class Solve>
std::vector<cplx> closed_level_curve(cplx start, int n, int turns, Solve solve) {
  // solve on a finer lattice of angles, keep every `sub`-th point; a step
  // that fails is split in halves, down to 2^-12 of the lattice spacing
  const int sub = std::max(1, (512 * turns + n - 1) / n);
  const std::int64_t total = static_cast<std::int64_t>(n) * sub;
  std::vector<cplx> out;
  out.reserve(n);
  cplx x = start, prev = start;
  auto advance = [&](auto&& self, std::int64_t num, std::int64_t den, int depth) -> void {
    const RationalAngle t(num * turns, den);
    auto r = solve(t, x + (x - prev));
    if (!r) r = solve(t, x);
    if (r && std::abs(*r - x) < 4.0 * std::abs(x - prev) + 1e-3) {
      prev = x;
      x = *r;
      return;
    }
    if (depth >= 12) fail(ErrorCode::ContinuationStalled, "equipotential continuation failed");
    self(self, 2 * num - 1, 2 * den, depth + 1);
    self(self, 2 * num, 2 * den, depth + 1);
  };
  for (std::int64_t k = 0; k < total; ++k) {
    if (k > 0) advance(advance, k, total, 0);
    if (k % sub == 0) out.push_back(x);
  }
  return out;
}

}  // namespace

std::vector<cplx> dynamical_equipotential(cplx a, double log_r, int n) {
  if (!(log_r > 0)) fail(ErrorCode::InvalidArgument, "equipotential needs r > 1");
  const auto ray = trace_dynamical_ray(a, RationalAngle(0, 1), log_r);
  if (ray.samples.back().log_r > log_r * (1 + 1e-12))
    fail(ErrorCode::ContinuationStalled, "angle-0 ray crashed above the requested level");
  return closed_level_curve(ray.samples.back().point, n, 1, [&](const RationalAngle& t, cplx x) {
    return solve_dynamical_point(a, log_r, t, x);
  });
}

std::vector<cplx> parameter_equipotential(double log_r, int n) {
  if (!(log_r > 0)) fail(ErrorCode::InvalidArgument, "equipotential needs r > 1");
  const auto ray = trace_parameter_ray(Quadrant::S, RationalAngle(0, 1), log_r);
  if (ray.samples.back().log_r > log_r * (1 + 1e-12))
    fail(ErrorCode::ContinuationStalled, "angle-0 parameter ray stopped above the level");
  return closed_level_curve(ray.samples.back().point, n, 3, [&](const RationalAngle& t, cplx x) {
    return solve_parameter_point(log_r, t, x);
  });
}

std::optional<cplx> snap_to_zero_preimage(cplx a, cplx z, int n, double max_dist) {
  cplx x = z;
  for (int it = 0; it < 400; ++it) {
    cplx w = x, dw = 1.0;
    for (int k = 0; k < n; ++k) {
      dw = df(a, w) * dw;
      w = f(a, w);
    }
    if (std::abs(w) < 1e-15) break;
    if (dw == 0.0) return std::nullopt;
    const cplx step = w / dw;
    x -= step;
    if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  cplx w = x;
  for (int k = 0; k < n; ++k) w = f(a, w);
  if (std::abs(w) > 1e-10 || std::abs(x - z) > max_dist) return std::nullopt;
  return x;
}

std::string ray_to_jsonl(const RayTrace& ray) {
  std::ostringstream os;
  os.precision(17);
  const std::string quad =
      ray.quadrant ? std::string("\"") + quadrant_name(*ray.quadrant) + "\"" : "null";
  for (const auto& p : ray.samples) {
    os << "{\"angle_num\":" << ray.angle.num() << ",\"angle_den\":" << ray.angle.den()
       << ",\"quadrant\":" << quad << ",\"r\":" << std::exp(p.log_r) << ",\"log_r\":" << p.log_r
       << ",\"re\":" << p.point.real() << ",\"im\":" << p.point.imag() << "}\n";
  }
  const char* kind = ray.landing.kind == Landing::Kind::Landed    ? "Landed"
                     : ray.landing.kind == Landing::Kind::Crashed ? "Crashed"
                                                                  : "Truncated";
  os << "{\"angle_num\":" << ray.angle.num() << ",\"angle_den\":" << ray.angle.den()
     << ",\"quadrant\":" << quad << ",\"verdict\":\"" << kind << "\",\"re\":"
     << ray.landing.point.real() << ",\"im\":" << ray.landing.point.imag()
     << ",\"confidence\":" << ray.landing.confidence << ",\"reason\":\"" << ray.landing.reason
     << "\"}\n";
  return os.str();
}

}  // namespace per1
