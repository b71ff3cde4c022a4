#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "per1/model.hpp"

namespace per1 {

cplx psi(cplx a) {
  const FatouCoordinate fc(a);
  return fc(critical_values(a).minus);
}

cplx psi_capture(cplx a, int n) {
  const FatouCoordinate fc(a);
  cplx z = critical_points(a).minus;
  for (int i = 0; i <= n; ++i) z = f(a, z);
  return fc(z);
}

namespace {

using Fn = std::function<cplx(cplx)>;
using Path = std::function<cplx(double)>;

constexpr double kMaxJump = 0.02;

std::optional<cplx> safe(const Fn& F, cplx a) {
  try {
    return F(a);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

std::optional<cplx> derivative(const Fn& F, cplx a, double h = 1e-7) {
  const auto p = safe(F, a + h), m = safe(F, a - h);
  if (!p || !m) return std::nullopt;
  return (*p - *m) / (2 * h);
}

std::optional<cplx> correct(const Fn& F, cplx a, cplx W) {
  for (int it = 0; it < 12; ++it) {
    const auto v = safe(F, a);
    const auto d = derivative(F, a);
    if (!v || !d || *d == 0.0) return std::nullopt;
    const cplx da = (*v - W) / *d;
    a -= da;
    if (std::abs(da) < 1e-13 * std::max(1.0, std::abs(a))) return a;
  }
  const auto v = safe(F, a);
  if (v && std::abs(*v - W) < 1e-9 * std::max(1.0, std::abs(W))) return a;
  return std::nullopt;
}

struct Continued {
  Polyline points;
  bool complete = true;
  std::string reason;
};

// Follow F(a) = W(t) for t from t0 to t1, starting at a0 with F(a0) = W(t0).
Continued follow(const Fn& F, const Path& W, double t0, double t1, cplx a0,
                 const ContinuationBudget& b) {
  Continued out;
  out.points.push_back(a0);
  cplx a = a0;
  double t = t0, step = (t1 - t0) / 32;
  int steps = 0;
  while ((t1 - t) * (t1 - t0) > 0) {
    if (++steps > b.max_steps) {
      out.complete = false;
      out.reason = "step budget exhausted";
      return out;
    }
    if (std::abs(step) > std::abs(t1 - t)) step = t1 - t;
    const auto d = derivative(F, a);
    bool ok = false;
    cplx an = a;
    if (d && *d != 0.0) {
      const cplx pred = a + (W(t + step) - W(t)) / *d;
      const auto c = correct(F, pred, W(t + step));
      if (c) {
        an = *c;
        ok = std::abs(an - pred) < 0.2 * std::abs(pred - a) + 1e-10 &&
             std::abs(an - a) < kMaxJump;
      }
    }
    if (ok) {
      a = an;
      t += step;
      out.points.push_back(a);
      step *= 1.5;
    } else {
      step *= 0.5;
      if (std::abs(step) < b.min_step) {
        out.complete = false;
        out.reason = "continuation stalled at t = " + std::to_string(t);
        return out;
      }
    }
  }
  return out;
}

// Double root of F - value near a: a <- a - 2 (F - value) / F'.
cplx double_root(const Fn& F, cplx a, cplx value) {
  for (int it = 0; it < 60; ++it) {
    const auto v = safe(F, a);
    const auto d = derivative(F, a, 1e-6);
    if (!v || !d || *d == 0.0) break;
    const cplx da = 2.0 * (*v - value) / *d;
    a -= da;
    if (std::abs(da) < 1e-12) break;
  }
  return a;
}

cplx second_coefficient(const Fn& F, cplx a) {
  const double h = 1e-3;
  return (F(a + h) + F(a - h) - 2.0 * F(a)) / (2 * h * h);
}

// From the critical point a* of F (F(a*) = value), leave along the direction
// where F - value = eps * dir, on the side u with Re(u conj(away)) >= 0.
std::optional<cplx> leave_critical(const Fn& F, cplx astar, cplx value, cplx dir, cplx away,
                                   double eps) {
  const cplx C = second_coefficient(F, astar);
  cplx u = std::sqrt(eps * dir / C);
  if (std::real(u * std::conj(away)) < 0) u = -u;
  return correct(F, astar + u, value + eps * dir);
}

void append(Polyline& dst, const Polyline& src) {
  dst.insert(dst.end(), src.begin() + (dst.empty() ? 0 : 1), src.end());
}

}  // namespace

ParamCurve parameter_gamma(const ContinuationBudget& b) {
  const Fn F = psi;
  // Re psi > 1 on the real segment (sqrt3, 2); search upward on Re a = 1.85
  const double x = 1.85;
  double ylo = 0, yhi = -1;
  for (double y = 0.005; y < 1.5; y += 0.005) {
    const auto v = safe(F, cplx(x, y));
    if (!v) break;
    if (v->real() < 1) {
      yhi = y;
      break;
    }
    ylo = y;
  }
  if (yhi < 0) fail(ErrorCode::ContinuationStalled, "no boundary point above 1.85");
  for (int i = 0; i < 60; ++i) {
    const double ym = 0.5 * (ylo + yhi);
    (F(cplx(x, ym)).real() < 1 ? yhi : ylo) = ym;
  }
  const cplx a0(x, 0.5 * (ylo + yhi));
  const double tau0 = F(a0).imag();
  if (tau0 <= 0) fail(ErrorCode::ContinuationStalled, "gamma seed on the wrong side");
  const Path W = [](double t) { return cplx(1.0, std::exp(t)); };
  const auto up = follow(F, W, std::log(tau0), std::log(b.tau_max), a0, b);
  const auto down = follow(F, W, std::log(tau0), std::log(b.tau_min), a0, b);
  ParamCurve out;
  out.id = "gamma";
  out.points.assign(down.points.rbegin(), down.points.rend());
  append(out.points, up.points);
  out.complete = up.complete && down.complete;
  out.reason = !down.complete ? down.reason : up.reason;
  return out;
}

namespace {

// Four branches of Re F = Re value leaving each double root of F = value.
std::vector<ParamCurve> level_branches(const Fn& F, cplx value, const std::vector<cplx>& seeds,
                                       const std::string& prefix, const ContinuationBudget& b) {
  std::vector<ParamCurve> out;
  int seed = 0;
  for (cplx r : seeds) {
    const cplx astar = double_root(F, r, value);
    const cplx C = second_coefficient(F, astar);
    for (int sgn : {1, -1}) {
      for (int side : {1, -1}) {
        const double eps = 1e-4;
        const cplx dir(0, sgn);
        cplx u = double(side) * std::sqrt(eps * dir / C);
        const auto a1 = correct(F, astar + u, value + eps * dir);
        ParamCurve c;
        c.id = prefix + "_" + std::to_string(seed) + (sgn > 0 ? "+" : "-") +
               (side > 0 ? "a" : "b");
        c.points.push_back(astar);
        if (!a1) {
          c.complete = false;
          c.reason = "could not leave the critical point";
          out.push_back(std::move(c));
          continue;
        }
        const Path W = [&](double t) { return value + cplx(0, sgn * std::exp(t)); };
        const auto r1 = follow(F, W, std::log(eps), std::log(b.tau_max), *a1, b);
        append(c.points, r1.points);
        c.complete = r1.complete;
        c.reason = r1.reason;
        out.push_back(std::move(c));
      }
    }
    ++seed;
  }
  return out;
}

}  // namespace

std::vector<ParamCurve> parameter_equipotential_u0(int n, const ContinuationBudget& b) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "use parameter_e0_u0 for n = 0");
  const Fn F = psi;
  const cplx value = 1.0 - n;
  std::vector<cplx> seeds;
  for (cplx r : solve_critical_relation(OrbitTarget::VPlus, n, Window{0, 2.5, 0, 2.5})) {
    if (r.imag() < 1e-9 && r.real() < kSqrt3 + 1e-9) continue;  // the branch cut
    const auto v = safe(F, r);
    if (!v || std::abs(*v - value) > 1e-6) continue;
    if (capture_depth(r, 0).kind != CaptureVerdict::Kind::Adjacent) continue;
    seeds.push_back(r);
  }
  return level_branches(F, value, seeds, "E" + std::to_string(n), b);
}

std::vector<ParamCurve> capture_equipotential_level(cplx centre, int n, int j, double radius,
                                                    const ContinuationBudget& b) {
  if (j < 1) fail(ErrorCode::InvalidArgument, "use capture_equipotential for level 0");
  const Fn F = [n](cplx a) { return psi_capture(a, n); };
  const cplx value = 1.0 - j;
  const Window w{centre.real() - radius, centre.real() + radius, centre.imag() - radius,
                 centre.imag() + radius};
  std::vector<cplx> seeds;
  for (cplx r : solve_critical_relation(OrbitTarget::VPlus, n + j, w)) {
    const auto v = safe(F, r);
    if (!v || std::abs(*v - value) > 1e-6) continue;
    const auto verdict = capture_depth(r, n);
    if (verdict.kind != CaptureVerdict::Kind::Capture || verdict.n != n) continue;
    seeds.push_back(r);
  }
  if (seeds.empty()) fail(ErrorCode::MissingComponentData, "no critical point of the level");
  return level_branches(F, value, seeds, "capture_E" + std::to_string(j), b);
}

std::vector<ParamCurve> parameter_e0_u0(const ContinuationBudget& b) {
  ParamCurve seg;
  seg.id = "E0_real";
  for (int j = 0; j <= 200; ++j) seg.points.push_back(kSqrt3 * j / 200);
  return {seg, parameter_gamma(b)};
}

ParamCurve parameter_internal_ray_u0(const InternalAngle& theta, int n_links,
                                     const ContinuationBudget& b) {
  const Fn F = psi;
  const int k = theta.l;
  const int s = theta.sign;
  cplx a;
  if (s > 0) {
    // the point of gamma with psi = 1 + i
    const auto g = parameter_gamma(b);
    cplx best = g.points.front();
    double bd = 1e300;
    for (cplx p : g.points) {
      const auto v = safe(F, p);
      if (v && std::abs(*v - cplx(1, 1)) < bd) {
        bd = std::abs(*v - cplx(1, 1));
        best = p;
      }
    }
    const auto c = correct(F, best, cplx(1, 1));
    if (!c) fail(ErrorCode::ContinuationStalled, "no start point on gamma");
    a = *c;
  } else {
    // on the real segment psi = 1 - i I(a), I decreasing
    double lo = 1.2, hi = 1.5;
    for (int i = 0; i < 60; ++i) {
      const double m = 0.5 * (lo + hi);
      (F(m).imag() < -1 ? lo : hi) = m;
    }
    a = 0.5 * (lo + hi);
  }

  const cplx start(1.0, s);
  auto L = [&](int n, double u) { return start + u * (cplx(-(k - 1), 0) - start) - double(n * k); };
  auto Lp = [&](int n, double u) {
    const cplx w = 0.5 * cplx(0, 1) - 0.5 * cplx(0, 1) * std::exp(cplx(0, M_PI * u));
    return (s > 0 ? w : std::conj(w)) - double(k - 1) - double(n * k);
  };

  ParamCurve out;
  out.id = "internal_" + theta.str();
  out.points.push_back(a);
  const double eps_u = 1e-3;
  for (int n = 0; n <= n_links; ++n) {
    const Path pl = [&](double u) { return L(n, u); };
    auto r = follow(F, pl, 0.0, 1.0 - eps_u, a, b);
    append(out.points, r.points);
    if (!r.complete) {
      out.complete = false;
      out.reason = "link " + std::to_string(n) + ": " + r.reason;
      return out;
    }
    const cplx target = L(n, 1.0);
    const cplx ain = r.points.back();
    const cplx astar = double_root(F, ain, target);
    out.points.push_back(astar);
    // leave straight through the critical point: L' starts opposite to L
    const cplx dir = (Lp(n, eps_u) - target) / std::abs(Lp(n, eps_u) - target);
    const auto a1 = leave_critical(F, astar, target, dir, astar - ain, std::abs(Lp(n, eps_u) - target));
    if (!a1) {
      out.complete = false;
      out.reason = "link " + std::to_string(n) + ": could not turn the corner";
      return out;
    }
    const Path plp = [&](double u) { return Lp(n, u); };
    r = follow(F, plp, eps_u, 1.0, *a1, b);
    out.points.push_back(*a1);
    append(out.points, r.points);
    if (!r.complete) {
      out.complete = false;
      out.reason = "link " + std::to_string(n) + ": " + r.reason;
      return out;
    }
    a = r.points.back();
  }
  return out;
}

ParamCurve capture_equipotential(cplx centre, int n, const ContinuationBudget& b) {
  const Fn F = [n](cplx a) { return psi_capture(a, n); };
  const cplx ac = double_root(F, centre, 0.0);
  const cplx C = second_coefficient(F, ac);
  const double eps = 1e-4;
  // two points with F = 1 near the centre; E(0) passes through the one whose
  // lift is the critical value 1/4
  std::optional<cplx> seed;
  double best = 1e300;
  for (int side : {1, -1}) {
    const auto a1 = correct(F, ac + double(side) * std::sqrt(eps / C), eps);
    if (!a1) continue;
    const Path W = [](double t) { return cplx(t, 0); };
    const auto r = follow(F, W, eps, 1.0, *a1, b);
    if (!r.complete) continue;
    const cplx as = r.points.back();
    cplx z = critical_points(as).minus;
    for (int i = 0; i <= n; ++i) z = f(as, z);
    try {
      const cplx h = lift_to_model(as, z).value;
      if (std::abs(h - 0.25) < best) {
        best = std::abs(h - 0.25);
        seed = as;
      }
    } catch (const DomainError&) {
    }
  }
  if (!seed) fail(ErrorCode::ContinuationStalled, "no seed for the capture equipotential");
  ParamCurve out;
  out.id = "capture_E0";
  Continued parts[2];
  for (int i = 0; i < 2; ++i) {
    const double sgn = i == 0 ? -1 : 1;
    const Path Wlin = [sgn](double t) { return cplx(1.0, sgn * t); };
    auto first = follow(F, Wlin, 0.0, 1.0, *seed, b);
    parts[i] = first;
    if (!first.complete) continue;
    const Path Wlog = [sgn](double t) { return cplx(1.0, sgn * std::exp(t)); };
    const auto second = follow(F, Wlog, 0.0, std::log(b.tau_max), first.points.back(), b);
    append(parts[i].points, second.points);
    parts[i].complete = second.complete;
    parts[i].reason = second.reason;
  }
  out.points.assign(parts[0].points.rbegin(), parts[0].points.rend());
  append(out.points, parts[1].points);
  out.complete = parts[0].complete && parts[1].complete;
  out.reason = !parts[0].complete ? parts[0].reason : parts[1].reason;
  return out;
}

}  // namespace per1
