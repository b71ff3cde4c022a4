#include "per1/puzzle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace per1 {

namespace {

constexpr int kFree = -5;

double pow3(int m) { return std::pow(3.0, m); }

double circular_distance(double s, double t) {
  const double d = std::fmod(std::abs(s - t), 1.0);
  return std::min(d, 1.0 - d);
}

// The boundary arcs of Omega~ = {Re fatou > 1}: fatou = 1 +- iy from v+ to
// the parabolic point, y spaced by sinh up to 1e3.
Polyline petal_arc(const FatouCoordinate& fc, cplx vplus, int sign, int samples) {
  const double tmax = std::asinh(1e3);
  Polyline arc{vplus};
  cplx z = vplus, W = 1.0;
  for (int j = 1; j < samples; ++j) {
    const cplx Wn(1.0, sign * std::sinh(tmax * j / (samples - 1)));
    z = fc.continue_inverse(z, W, Wn);
    W = Wn;
    arc.push_back(z);
  }
  arc.push_back(0.0);
  return arc;
}

// All lifts of a curve under f_a. A curve starting at a critical value has
// two lifts from the critical point, told apart by the roots over curve[1].
std::vector<Polyline> lift_all(const FatouCoordinate& fc, const Polyline& curve) {
  const cplx a = fc.a();
  const auto cp = critical_points(a);
  std::vector<Polyline> out;
  for (cplx c : {cp.plus, cp.minus}) {
    if (std::abs(f(a, c) - curve[0]) > 1e-13 * std::max(1.0, std::abs(curve[0]))) continue;
    auto r1 = cubic_preimages(a, curve[1]);
    std::sort(r1.begin(), r1.end(),
              [c](cplx u, cplx v) { return std::abs(u - c) < std::abs(v - c); });
    out.push_back(lift_polyline(fc, curve, c, r1[0]));
    out.push_back(lift_polyline(fc, curve, c, r1[1]));
    out.push_back(lift_polyline(fc, curve, -a - 2.0 * c));
    return out;
  }
  for (cplx r : cubic_preimages(a, curve[0])) out.push_back(lift_polyline(fc, curve, r));
  return out;
}

// External angle of the ray through z at potential g, found by following the
// ray outward until the Böttcher series applies at the point itself. Any third
// of the image angle gives the same Newton target while at least one iterate
// is taken.
double ray_angle_through(cplx a, cplx z, double g, const RationalAngle& image) {
  const RationalAngle t0(image.num(), 3 * image.den());
  const double h = std::log(escape_radius(a)) + 1.0;
  for (;;) {
    try {
      return std::arg(boettcher(a, z)) / kTwoPi;
    } catch (const DomainError&) {
    }
    g *= 1.1;
    if (g >= h) break;
    const auto next = solve_dynamical_point(a, g, t0, z);
    if (!next) break;
    z = *next;
  }
  fail(ErrorCode::RayCrash, "lifted ray of " + image.str() + " could not be followed outward");
}

// Ray polyline from the exact point at potential `level` down to `landing`.
Polyline ray_polyline(cplx a, const RayTrace& tr, double level, cplx landing) {
  Polyline out;
  const auto top = solve_dynamical_point(a, level, tr.angle, tr.samples.front().point);
  if (!top) fail(ErrorCode::RayCrash, "no ray point at the equipotential for " + tr.angle.str());
  out.push_back(*top);
  for (const auto& s : tr.samples)
    if (s.log_r < level) out.push_back(s.point);
  out.push_back(landing);
  return out;
}

GraphArc equipotential_arc(cplx a, double level, int samples, int depth) {
  GraphArc e;
  e.label.kind = ArcLabel::Kind::Equipotential;
  e.label.level = level;
  e.depth = depth;
  e.polyline = dynamical_equipotential(a, level, samples);
  e.polyline.push_back(e.polyline.front());
  return e;
}

// f^l(z) = z by Newton from the tail of an internal ray.
cplx polish_periodic(cplx a, cplx z, int l) {
  for (int it = 0; it < 50; ++it) {
    cplx w = z, d = 1.0;
    for (int i = 0; i < l; ++i) {
      d *= df(a, w);
      w = f(a, w);
    }
    const cplx dz = (w - z) / (d - 1.0);
    z -= dz;
    if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

// Depth-0 arcs of the X graph other than the petal boundary and E(r).
std::vector<GraphArc> cycle_arcs(cplx a, int l, const GraphOptions& opt) {
  InternalRay ray;
  try {
    ray = dynamical_internal_ray(a, InternalAngle{l, 1}, opt.internal_links);
  } catch (const DomainError& e) {
    fail(ErrorCode::ObstructedInternalRay, std::string("internal ray: ") + e.what());
  }
  Polyline c0;
  for (const auto& link : ray.links)
    for (cplx z : link)
      if (c0.empty() || z != c0.back()) c0.push_back(z);
  const cplx z0 = polish_periodic(a, ray.tail, l);
  if (std::abs(z0 - ray.tail) > 1e-3)
    fail(ErrorCode::ObstructedInternalRay, "internal ray tail is not near a periodic point");
  c0.back() = z0;

  std::vector<GraphArc> out;
  const std::int64_t qi = (std::int64_t(1) << l) - 1;
  Polyline cj = c0;
  for (int j = 0; j < l; ++j) {
    GraphArc arc;
    arc.label.kind = ArcLabel::Kind::InternalRay;
    arc.label.angle = RationalAngle(std::int64_t(1) << j, qi);
    arc.polyline = cj;
    arc.landing = cj.back();
    out.push_back(arc);
    for (cplx& z : cj) z = f(a, z);
  }

  // eta: the angle k/(3^l - 1) whose ray lands nearest z0
  std::int64_t qe = 1;
  for (int j = 0; j < l; ++j) qe *= 3;
  qe -= 1;
  std::map<std::int64_t, RayTrace> traced;
  std::int64_t eta = -1;
  double best = 1e300;
  for (std::int64_t k = 0; k < qe; ++k) {
    auto tr = trace_dynamical_ray(a, RationalAngle(k, qe), 1e-30, opt.log_r);
    if (tr.landing.kind != Landing::Kind::Landed) continue;
    const double d = std::abs(tr.landing.point - z0);
    if (d < best) {
      best = d;
      eta = k;
    }
    traced.emplace(k, std::move(tr));
  }
  if (eta < 0 || best > 2e-3)
    fail(ErrorCode::ObstructedInternalRay, "no external ray of period dividing l lands with it");
  RationalAngle t(eta, qe);
  cplx zj = z0;
  for (int j = 0; j < l; ++j) {
    const auto& tr = traced.at(t.num() * (qe / t.den()));
    if (std::abs(tr.landing.point - zj) > 2e-3)
      fail(ErrorCode::ObstructedInternalRay, "external cycle does not follow the internal one");
    GraphArc arc;
    arc.label.kind = ArcLabel::Kind::ExternalRay;
    arc.label.angle = t;
    arc.polyline = ray_polyline(a, tr, opt.log_r, zj);
    arc.landing = zj;
    out.push_back(arc);
    t = t.times3();
    zj = f(a, zj);
  }
  return out;
}

std::vector<DynGraph> tower(cplx a, int m, DynGraph::Kind kind, bool wake, int l,
                            const GraphOptions& opt) {
  if (m < 0 || m > 5) fail(ErrorCode::InvalidArgument, "graph depth must be 0..5");
  if (!(opt.log_r > 0)) fail(ErrorCode::InvalidArgument, "log r must be positive");
  const FatouCoordinate fc(a);
  DynGraph g0;
  g0.a = a;
  g0.kind = kind;
  g0.wake = wake;
  g0.l = l;
  g0.log_r = opt.log_r;

  const cplx vplus = critical_values(a).plus;
  const Polyline up = petal_arc(fc, vplus, 1, opt.petal_samples);
  const Polyline down = petal_arc(fc, vplus, -1, opt.petal_samples);
  g0.petal_image.assign(up.rbegin(), up.rend());
  g0.petal_image.insert(g0.petal_image.end(), down.begin() + 1, down.end() - 1);
  for (int s : {0, 1}) {
    GraphArc arc;
    arc.label.kind = ArcLabel::Kind::PetalBoundary;
    arc.label.tag = s == 0 ? "+" : "-";
    arc.polyline = s == 0 ? up : down;
    g0.arcs.push_back(arc);
  }

  if (kind == DynGraph::Kind::Y) {
    std::vector<RationalAngle> angles{RationalAngle(0, 1)};
    if (wake) angles.emplace_back(1, 2);
    for (const auto& t : angles) {
      const auto tr = trace_dynamical_ray(a, t, opt.ray_log_rmin, opt.log_r);
      if (tr.landing.kind == Landing::Kind::Crashed)
        fail(ErrorCode::RayCrash, "depth 0, angle " + t.str() + ": " + tr.landing.reason);
      if (std::abs(tr.landing.point) > 5e-3)
        fail(t.num() == 0 ? ErrorCode::RayCrash : ErrorCode::NotApplicable,
             "ray " + t.str() + " does not land at 0");
      GraphArc arc;
      arc.label.kind = ArcLabel::Kind::ExternalRay;
      arc.label.angle = t;
      arc.polyline = ray_polyline(a, tr, opt.log_r, 0.0);
      arc.landing = 0.0;
      g0.arcs.push_back(arc);
    }
  } else {
    if (l < 2) fail(ErrorCode::InvalidArgument, "internal angle generator l must be >= 2");
    for (auto& arc : cycle_arcs(a, l, opt)) g0.arcs.push_back(std::move(arc));
  }
  g0.arcs.push_back(equipotential_arc(a, opt.log_r, opt.equipotential_samples, 0));

  std::vector<DynGraph> out{g0};
  for (int k = 1; k <= m; ++k) {
    const DynGraph& prev = out.back();
    DynGraph g = prev;
    g.depth = k;
    g.arcs.clear();
    const double level = opt.log_r / pow3(k);
    for (const auto& arc : prev.arcs) {
      if (arc.label.kind == ArcLabel::Kind::Equipotential) continue;
      std::vector<Polyline> lifts;
      try {
        lifts = lift_all(fc, arc.polyline);
      } catch (const DomainError& e) {
        const ErrorCode code = arc.label.kind == ArcLabel::Kind::InternalRay
                                   ? ErrorCode::ObstructedInternalRay
                                   : ErrorCode::RayCrash;
        fail(code, "depth " + std::to_string(k) + ", preimage of " + arc.label.str() + ": " +
                       e.what());
      }
      for (auto& p : lifts) {
        GraphArc next;
        next.label = arc.label;
        next.depth = k;
        if (arc.landing) next.landing = p.back();
        if (arc.label.kind == ArcLabel::Kind::ExternalRay) {
          // the angle among the three thirds closest to the Böttcher argument
          const double s = ray_angle_through(a, p.front(), level, arc.label.angle);
          const auto& t = arc.label.angle;
          double bestd = 1e300;
          for (int j = 0; j < 3; ++j) {
            const RationalAngle cand(t.num() + j * t.den(), 3 * t.den());
            const double d = circular_distance(s, cand.value());
            if (d < bestd) {
              bestd = d;
              next.label.angle = cand;
            }
          }
        }
        next.polyline = std::move(p);
        g.arcs.push_back(std::move(next));
      }
    }
    // every preimage angle must occur exactly once
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& arc : g.arcs)
      if (arc.label.kind == ArcLabel::Kind::ExternalRay &&
          !seen.insert({arc.label.angle.num(), arc.label.angle.den()}).second)
        fail(ErrorCode::RayCrash, "depth " + std::to_string(k) + ": two lifts of ray " +
                                      arc.label.angle.str() + " were told apart wrongly");
    g.arcs.push_back(equipotential_arc(a, level, opt.equipotential_samples, k));
    out.push_back(std::move(g));
  }
  return out;
}

// Supercover of the segment between grid coordinates p and q: every cell the
// segment meets, both cells at an exact corner crossing.
template <class Visit>
void supercover(double x0, double y0, double x1, double y1, Visit&& visit) {
  int i = int(std::floor(x0)), j = int(std::floor(y0));
  const int i1 = int(std::floor(x1)), j1 = int(std::floor(y1));
  const double dx = x1 - x0, dy = y1 - y0;
  const int si = dx > 0 ? 1 : (dx < 0 ? -1 : 0), sj = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  const double tdx = si ? std::abs(1.0 / dx) : inf, tdy = sj ? std::abs(1.0 / dy) : inf;
  double tx = si > 0 ? (i + 1 - x0) * tdx : si < 0 ? (x0 - i) * tdx : inf;
  double ty = sj > 0 ? (j + 1 - y0) * tdy : sj < 0 ? (y0 - j) * tdy : inf;
  visit(i, j);
  int guard = std::abs(i1 - i) + std::abs(j1 - j) + 2;
  while ((i != i1 || j != j1) && guard-- > 0) {
    if (tx < ty - 1e-12) {
      tx += tdx;
      i += si;
    } else if (ty < tx - 1e-12) {
      ty += tdy;
      j += sj;
    } else {
      visit(i + si, j);
      visit(i, j + sj);
      tx += tdx;
      ty += tdy;
      i += si;
      j += sj;
      --guard;
    }
    visit(i, j);
  }
}

double orient(cplx a, cplx b, cplx c) { return std::imag(std::conj(b - a) * (c - a)); }

bool segments_cross(cplx p, cplx q, cplx r, cplx s) {
  const double d1 = orient(r, s, p), d2 = orient(r, s, q);
  const double d3 = orient(p, q, r), d4 = orient(p, q, s);
  return ((d1 > 0) != (d2 > 0) || d1 == 0 || d2 == 0) &&
         ((d3 > 0) != (d4 > 0) || d3 == 0 || d4 == 0) &&
         std::max(std::min(p.real(), q.real()), std::min(r.real(), s.real())) <=
             std::min(std::max(p.real(), q.real()), std::max(r.real(), s.real())) &&
         std::max(std::min(p.imag(), q.imag()), std::min(r.imag(), s.imag())) <=
             std::min(std::max(p.imag(), q.imag()), std::max(r.imag(), s.imag()));
}

double segment_distance(cplx z, cplx p, cplx q) {
  const cplx d = q - p;
  const double len2 = std::norm(d);
  double u = len2 > 0 ? std::real(std::conj(d) * (z - p)) / len2 : 0;
  u = std::clamp(u, 0.0, 1.0);
  return std::abs(z - (p + u * d));
}

// Green function for classifying grid cells: orbits still bounded after 60
// steps have g below every level used here.
double cell_green(cplx a, cplx z, double R) {
  cplx w = z;
  for (int k = 0; k < 60; ++k) {
    if (std::abs(w) > R) return green_function(a, z);
    w = f(a, w);
  }
  return 0;
}

Polyline convex_hull(std::vector<cplx> pts) {
  auto less = [](cplx u, cplx v) {
    return u.real() < v.real() || (u.real() == v.real() && u.imag() < v.imag());
  };
  std::sort(pts.begin(), pts.end(), less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  Polyline h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && orient(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && orient(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double diameter(const Polyline& hull) {
  double d = 0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, std::abs(hull[i] - hull[j]));
  return d;
}

}  // namespace

std::string ArcLabel::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::ExternalRay:
      os << "R(" << angle.str() << ")";
      break;
    case Kind::InternalRay:
      os << "R0(" << angle.str() << ")";
      break;
    case Kind::Equipotential:
      os << "E";
      if (!tag.empty()) os << "[" << tag << "]";
      os << "(" << level << ")";
      return os.str();
    case Kind::PetalBoundary:
      os << "dOmega" << tag;
      return os.str();
  }
  if (!tag.empty()) os << "[" << tag << "]";
  return os.str();
}

std::array<cplx, 3> cubic_preimages(cplx a, cplx p) {
  // Durand-Kerner on z^3 + a z^2 + z - p, then Newton
  std::array<cplx, 3> r;
  const double rho = 1.0 + std::max({std::abs(a), 1.0, std::abs(p)});
  for (int k = 0; k < 3; ++k) r[k] = rho * std::pow(cplx(0.4, 0.9), k + 1);
  const auto poly = [&](cplx z) { return f(a, z) - p; };
  for (int it = 0; it < 500; ++it) {
    double change = 0;
    for (int k = 0; k < 3; ++k) {
      cplx den = 1.0;
      for (int j = 0; j < 3; ++j)
        if (j != k) den *= r[k] - r[j];
      if (den == 0.0) den = 1e-300;
      const cplx step = poly(r[k]) / den;
      r[k] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * rho) break;
  }
  for (auto& z : r)
    for (int it = 0; it < 3; ++it) {
      const cplx d = df(a, z);
      if (std::abs(d) < 1e-8) break;
      z -= poly(z) / d;
    }
  return r;
}

double DynGraph::level() const { return log_r / pow3(depth); }

std::vector<DynGraph> graph_tower_Y(cplx a, int m, bool wake, const GraphOptions& opt) {
  return tower(a, m, DynGraph::Kind::Y, wake, 0, opt);
}

std::vector<DynGraph> graph_tower_X(cplx a, int m, int l, const GraphOptions& opt) {
  return tower(a, m, DynGraph::Kind::X, false, l, opt);
}

DynGraph build_graph_Y(cplx a, int m, bool wake, const GraphOptions& opt) {
  return graph_tower_Y(a, m, wake, opt).back();
}

DynGraph build_graph_X(cplx a, int m, int l, const GraphOptions& opt) {
  return graph_tower_X(a, m, l, opt).back();
}

bool wake_test(cplx a) {
  if (a == 0.0) fail(ErrorCode::InvalidArgument, "the wake test needs a != 0");
  for (const RationalAngle t : {RationalAngle(0, 1), RationalAngle(1, 2)}) {
    const auto tr = trace_dynamical_ray(a, t, 1e-100);
    if (tr.landing.kind == Landing::Kind::Crashed)
      fail(ErrorCode::RayCrash, "ray " + t.str() + ": " + tr.landing.reason);
    if (std::abs(tr.landing.point) > 5e-3) return false;
  }
  return true;
}

PieceGrid default_grid(cplx a, double log_r, int n) {
  const auto e = dynamical_equipotential(a, log_r, 512);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (cplx z : e) {
    x0 = std::min(x0, z.real());
    x1 = std::max(x1, z.real());
    y0 = std::min(y0, z.imag());
    y1 = std::max(y1, z.imag());
  }
  const double half = 0.525 * std::max(x1 - x0, y1 - y0);
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  return PieceGrid{Window{cx - half, cx + half, cy - half, cy + half}, n};
}

// Even-odd test against a closed polygon, edges binned by height.
struct PuzzleMap::HoleIndex {
  Polyline p;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0, dy = 1;
  std::vector<std::vector<int>> bins;

  explicit HoleIndex(const Polyline& poly) : p(poly) {
    x0 = y0 = 1e300;
    x1 = y1 = -1e300;
    for (cplx z : p) {
      x0 = std::min(x0, z.real());
      x1 = std::max(x1, z.real());
      y0 = std::min(y0, z.imag());
      y1 = std::max(y1, z.imag());
    }
    const int nb = 256;
    dy = std::max(y1 - y0, 1e-12) / nb;
    bins.resize(nb);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const cplx u = p[k], v = p[(k + 1) % p.size()];
      const int b0 = bin(std::min(u.imag(), v.imag())), b1 = bin(std::max(u.imag(), v.imag()));
      for (int b = b0; b <= b1; ++b) bins[b].push_back(int(k));
    }
  }
  int bin(double y) const {
    return std::clamp(int((y - y0) / dy), 0, int(bins.size()) - 1);
  }
  bool contains(cplx z) const {
    const double x = z.real(), y = z.imag();
    if (!(x >= x0 && x <= x1 && y >= y0 && y <= y1)) return false;
    bool in = false;
    for (int k : bins[bin(y)]) {
      const cplx u = p[k], v = p[(k + 1) % p.size()];
      if ((u.imag() > y) != (v.imag() > y) &&
          x < u.real() + (y - u.imag()) * (v.real() - u.real()) / (v.imag() - u.imag()))
        in = !in;
    }
    return in;
  }
};

bool PuzzleMap::in_hole(cplx z) const {
  const double R = escape_radius(g_.a);
  for (int k = 0; k < g_.depth; ++k) {
    if (std::abs(z) > R) return false;
    z = f(g_.a, z);
  }
  return hole_->contains(z);
}

cplx PuzzleMap::centre(int i, int j) const {
  const double h = grid_.pixel();
  return {grid_.window.re_min + (i + 0.5) * h, grid_.window.im_min + (j + 0.5) * h};
}

std::optional<std::pair<int, int>> PuzzleMap::cell_of(cplx z) const {
  const double h = grid_.pixel();
  const double u = (z.real() - grid_.window.re_min) / h, v = (z.imag() - grid_.window.im_min) / h;
  if (!(u >= 0 && v >= 0 && u < grid_.n && v < grid_.n)) return std::nullopt;
  return std::make_pair(int(u), int(v));
}

PuzzleMap::PuzzleMap(const DynGraph& g, const PieceGrid& grid) : g_(g), grid_(grid) {
  if (grid.n < 8) fail(ErrorCode::InvalidArgument, "grid too small");
  const int n = grid.n;
  const double h = grid.pixel();
  hole_ = std::make_shared<HoleIndex>(g.petal_image);
  label_.assign(std::size_t(n) * n, kOutside);
  const double level = g.level(), R = escape_radius(g.a);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const cplx z = centre(i, j);
      if (cell_green(g.a, z, R) >= level) continue;
      label_[std::size_t(j) * n + i] = in_hole(z) ? kHole : kFree;
    }

  wall_segments_.assign(std::size_t(n) * n, {});
  for (std::size_t k = 0; k < g.arcs.size(); ++k) {
    const auto& arc = g.arcs[k];
    if (arc.label.kind == ArcLabel::Kind::Equipotential) continue;
    for (std::size_t s = 0; s + 1 < arc.polyline.size(); ++s) {
      const cplx p = arc.polyline[s], q = arc.polyline[s + 1];
      const auto gx = [&](cplx z) { return (z.real() - grid.window.re_min) / h; };
      const auto gy = [&](cplx z) { return (z.imag() - grid.window.im_min) / h; };
      // segments far outside the window cannot matter
      if (std::max(std::abs(gx(p)), std::abs(gy(p))) > 4.0 * n &&
          std::max(std::abs(gx(q)), std::abs(gy(q))) > 4.0 * n)
        continue;
      supercover(gx(p), gy(p), gx(q), gy(q), [&](int i, int j) {
        if (i < 0 || j < 0 || i >= n || j >= n) return;
        const std::size_t c = std::size_t(j) * n + i;
        auto& list = wall_segments_[c];
        if (list.empty() || list.back() != std::make_pair(int(k), int(s)))
          list.emplace_back(int(k), int(s));
        if (label_[c] == kFree) label_[c] = kWall;
      });
    }
  }

  // 4-connected components of the free cells
  std::vector<std::vector<int>> comps;
  std::vector<char> touches;
  std::deque<int> queue;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int start = j * n + i;
      if (label_[start] != kFree) continue;
      const int id = int(comps.size());
      comps.emplace_back();
      touches.push_back(0);
      label_[start] = id;
      queue.push_back(start);
      while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        comps[id].push_back(c);
        const int ci = c % n, cj = c / n;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int ni = ci + di[d], nj = cj + dj[d];
          if (ni < 0 || nj < 0 || ni >= n || nj >= n) {
            touches[id] = 1;
            continue;
          }
          int& lab = label_[nj * n + ni];
          if (lab == kOutside) touches[id] = 1;
          if (lab == kFree) {
            lab = id;
            queue.push_back(nj * n + ni);
          }
        }
      }
    }

  // Components split only by the width of a rasterised wall are one face:
  // join them when the segment between two cell centres around a wall cell
  // meets no arc and stays inside the equipotential.
  std::vector<int> parent(comps.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (label_[std::size_t(j) * n + i] != kWall) continue;
      std::vector<std::pair<int, int>> around;  // (component, cell)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
          const int lab = label_[std::size_t(nj) * n + ni];
          if (lab >= 0) around.emplace_back(lab, nj * n + ni);
        }
      for (std::size_t u = 0; u < around.size(); ++u)
        for (std::size_t v = u + 1; v < around.size(); ++v) {
          const int cu = around[u].first, cv = around[v].first;
          if (find(cu) == find(cv)) continue;
          const int p = around[u].second, q = around[v].second;
          if (!crosses_graph(centre(p % n, p / n), centre(q % n, q / n)))
            parent[find(cu)] = find(cv);
        }
    }

  // merged faces in the order of their leftmost-lowest cell
  std::map<int, std::vector<int>> groups;
  for (int c = 0; c < int(comps.size()); ++c) groups[find(c)].push_back(c);
  std::vector<std::pair<int, std::vector<int>>> order;  // (first scan key, components)
  for (auto& [root, members] : groups) {
    int key = std::numeric_limits<int>::max();
    for (int c : members) {
      const int first = comps[c].front();
      key = std::min(key, (first % n) * n + first / n);
    }
    order.emplace_back(key, members);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [key, members] : order) {
    bool touch = false;
    for (int c : members) touch = touch || touches[c];
    const int id = touch ? int(pieces_.size()) : kEnclosed;
    std::vector<int> cells;
    for (int c : members) cells.insert(cells.end(), comps[c].begin(), comps[c].end());
    for (int c : cells) label_[c] = id;
    if (!touch) continue;
    PuzzlePiece piece;
    piece.id = id;
    piece.depth = g.depth;
    piece.pixels = cells.size();
    pieces_.push_back(std::move(piece));
  }

  std::vector<std::vector<cplx>> pts(pieces_.size());
  std::vector<std::set<std::string>> labels(pieces_.size());
  ArcLabel e;
  e.level = level;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int id = label_[std::size_t(j) * n + i];
      if (id < 0) continue;
      const cplx z = centre(i, j);
      for (cplx corner : {cplx(-0.5, -0.5), cplx(0.5, -0.5), cplx(0.5, 0.5), cplx(-0.5, 0.5)})
        pts[id].push_back(z + h * corner);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
          const std::size_t nc = std::size_t(nj) * n + ni;
          if (label_[nc] == kOutside) labels[id].insert(e.str());
          if (label_[nc] == kWall || label_[nc] == kHole)
            for (const auto& [arc, seg] : wall_segments_[nc]) labels[id].insert(g.arcs[arc].label.str());
        }
    }
  for (auto& piece : pieces_) {
    piece.boundary_labels.assign(labels[piece.id].begin(), labels[piece.id].end());
    piece.polygon = convex_hull(std::move(pts[piece.id]));
    piece.diameter = diameter(piece.polygon);
  }
}

bool PuzzleMap::crosses_graph(cplx p, cplx q) const {
  const int n = grid_.n;
  const double h = grid_.pixel();
  bool hit = false;
  const auto gx = [&](cplx z) { return (z.real() - grid_.window.re_min) / h; };
  const auto gy = [&](cplx z) { return (z.imag() - grid_.window.im_min) / h; };
  supercover(gx(p), gy(p), gx(q), gy(q), [&](int i, int j) {
    if (hit || i < 0 || j < 0 || i >= n || j >= n) return;
    for (const auto& [arc, seg] : wall_segments_[std::size_t(j) * n + i]) {
      const auto& pl = g_.arcs[arc].polyline;
      if (segments_cross(p, q, pl[seg], pl[seg + 1])) {
        hit = true;
        return;
      }
    }
  });
  if (hit) return true;
  for (int k = 1; k < 8; ++k)
    if (green_function(g_.a, p + (q - p) * (k / 8.0)) >= g_.level()) return true;
  return false;
}

bool PuzzleMap::near_wall(cplx z, double tol) const {
  const auto c = cell_of(z);
  if (!c) return false;
  const int n = grid_.n;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int i = c->first + di, j = c->second + dj;
      if (i < 0 || j < 0 || i >= n || j >= n) continue;
      for (const auto& [arc, seg] : wall_segments_[std::size_t(j) * n + i]) {
        const auto& p = g_.arcs[arc].polyline;
        if (segment_distance(z, p[seg], p[seg + 1]) < tol) return true;
      }
    }
  return false;
}

Location PuzzleMap::locate(cplx z) const {
  const auto c = cell_of(z);
  if (!c) return {Location::Kind::Outside, -1};
  const double level = g_.level();
  const double g = green_function(g_.a, z);
  if (std::abs(g - level) < 1e-6) return {Location::Kind::Boundary, -1};
  if (g > level) return {Location::Kind::Outside, -1};
  if (near_wall(z, 1e-6)) return {Location::Kind::Boundary, -1};
  if (in_hole(z)) return {Location::Kind::Hole, -1};
  const int lab = cell(c->first, c->second);
  if (lab >= 0) return {Location::Kind::Piece, lab};
  if (lab == kEnclosed) return {Location::Kind::Hole, -1};

  // a wall or hole cell: the nearest piece cell reachable without crossing a wall
  const int n = grid_.n;
  for (int r = 1; r <= 2; ++r) {
    int best = -1;
    double bestd = 1e300;
    for (int dj = -r; dj <= r; ++dj)
      for (int di = -r; di <= r; ++di) {
        const int i = c->first + di, j = c->second + dj;
        if (i < 0 || j < 0 || i >= n || j >= n) continue;
        const int l = cell(i, j);
        if (l < 0) continue;
        const cplx q = centre(i, j);
        if (std::abs(q - z) < bestd && !crosses_graph(z, q)) {
          bestd = std::abs(q - z);
          best = l;
        }
      }
    if (best >= 0) return {Location::Kind::Piece, best};
  }
  return {Location::Kind::Boundary, -1};
}

int PuzzleMap::resolved_cell(int i, int j) const {
  const int l = cell(i, j);
  if (l >= 0 || l == kOutside || l == kEnclosed) return l;
  const auto loc = locate(centre(i, j));
  return loc.kind == Location::Kind::Piece ? loc.piece : l;
}

std::vector<std::vector<std::pair<int, int>>> PuzzleMap::piece_cells() const {
  std::vector<std::vector<std::pair<int, int>>> out(pieces_.size());
  for (int j = 0; j < grid_.n; ++j)
    for (int i = 0; i < grid_.n; ++i) {
      const int l = cell(i, j);
      if (l >= 0) out[l].emplace_back(i, j);
    }
  return out;
}

PuzzleMap extract_pieces(const DynGraph& g, const PieceGrid& grid) { return PuzzleMap(g, grid); }

AdjacentPair adjacent_pieces_at_zero_preimage(const PuzzleMap& map, cplx x) {
  const auto& g = map.graph();
  std::vector<const GraphArc*> rays;
  for (const auto& arc : g.arcs)
    if (arc.label.kind == ArcLabel::Kind::ExternalRay && arc.landing &&
        std::abs(*arc.landing - x) < 1e-6)
      rays.push_back(&arc);
  if (rays.empty()) fail(ErrorCode::NotALandingVertex, "no ray of the graph lands at this point");
  std::sort(rays.begin(), rays.end(),
            [](const GraphArc* u, const GraphArc* v) { return u->label.angle < v->label.angle; });

  const double h = map.grid().pixel();
  // (left, right) faces of a ray looking outward, by majority over probes
  auto faces = [&](const GraphArc& ray) {
    const auto& p = ray.polyline;
    std::vector<double> s(p.size(), 0.0);
    for (std::size_t k = 1; k < p.size(); ++k) s[k] = s[k - 1] + std::abs(p[k] - p[k - 1]);
    std::map<int, int> left, right;
    std::size_t k = 0;
    for (int probe = 1; probe < 20; ++probe) {
      const double target = s.back() * probe / 20.0;
      while (k + 2 < p.size() && s[k + 1] < target) ++k;
      const cplx seg = p[k] - p[k + 1];  // outward
      if (std::abs(seg) == 0) continue;
      const double u = (target - s[k]) / (s[k + 1] - s[k]);
      const cplx z = p[k] + u * (p[k + 1] - p[k]);
      const cplx nrm = cplx(0, 1) * seg / std::abs(seg);
      const auto l = map.locate(z + 1.5 * h * nrm);
      const auto r = map.locate(z - 1.5 * h * nrm);
      if (l.kind == Location::Kind::Piece) ++left[l.piece];
      if (r.kind == Location::Kind::Piece) ++right[r.piece];
    }
    auto top = [](const std::map<int, int>& votes) {
      int best = -1, count = 0;
      for (const auto& [id, c] : votes)
        if (c > count) {
          best = id;
          count = c;
        }
      return best;
    };
    return std::make_pair(top(left), top(right));
  };

  AdjacentPair out;
  for (const auto* r : rays) out.rays.push_back(r->label.angle);
  const auto f0 = faces(*rays[0]);
  if (rays.size() == 1) {
    out.plus = f0.first;
    out.minus = f0.second;
  } else {
    const auto f1 = faces(*rays.back());
    auto only = [](std::pair<int, int> mine, std::pair<int, int> other) {
      for (int id : {mine.first, mine.second})
        if (id >= 0 && id != other.first && id != other.second) return id;
      return -1;
    };
    out.plus = only(f0, f1);
    out.minus = only(f1, f0);
  }
  return out;
}

double containment_fraction(const PuzzleMap& fine, const PuzzleMap& coarse) {
  const auto& gf = fine.grid();
  const auto& gc = coarse.grid();
  if (gf.n != gc.n || gf.window.re_min != gc.window.re_min ||
      gf.window.im_min != gc.window.im_min || gf.window.re_max != gc.window.re_max)
    fail(ErrorCode::InvalidArgument, "containment needs a shared grid");
  std::size_t total = 0, inside = 0;
  for (const auto& cells : fine.piece_cells()) {
    std::map<int, std::size_t> votes;
    for (const auto& [i, j] : cells) ++votes[coarse.resolved_cell(i, j)];
    std::size_t best = 0;
    for (const auto& [id, count] : votes)
      if (id >= 0) best = std::max(best, count);
    inside += best;
    total += cells.size();
  }
  return total ? double(inside) / double(total) : 1.0;
}

std::vector<NestingRow> nesting_report(cplx a, int l, const std::vector<int>& depths,
                                       const PieceGrid& grid, const GraphOptions& opt) {
  if (depths.empty()) return {};
  std::vector<int> ds = depths;
  std::sort(ds.begin(), ds.end());
  ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
  const auto graphs = graph_tower_X(a, ds.back(), l, opt);
  const cplx vminus = critical_values(a).minus;
  std::vector<NestingRow> rows;
  std::optional<PuzzleMap> prev;
  for (int d : ds) {
    PuzzleMap map(graphs[d], grid);
    NestingRow row;
    row.depth = d;
    const auto loc = map.locate(vminus);
    row.critical_piece = loc.kind == Location::Kind::Piece ? loc.piece : -1;
    if (row.critical_piece >= 0) {
      row.diameter = map.pieces()[row.critical_piece].diameter;
      if (prev && rows.back().critical_piece >= 0) {
        const int outer = rows.back().critical_piece;
        const auto cells = map.piece_cells()[row.critical_piece];
        for (const auto& [i, j] : cells) {
          if (prev->resolved_cell(i, j) != outer) row.contained = false;
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
              const int ni = i + di, nj = j + dj;
              if (ni < 0 || nj < 0 || ni >= grid.n || nj >= grid.n ||
                  prev->cell(ni, nj) != outer)
                row.compact_inside = false;
            }
        }
      }
    } else {
      row.contained = row.compact_inside = false;
    }
    rows.push_back(row);
    prev.emplace(std::move(map));
  }
  return rows;
}

std::vector<RationalAngle> para_graph_angles(int n) {
  if (n < 0 || n > 2) fail(ErrorCode::InvalidArgument, "parameter graph depth must be 0..2");
  std::int64_t q = 1;
  for (int k = 0; k < n; ++k) q *= 3;
  std::vector<RationalAngle> out;
  for (std::int64_t k = 0; k < q; ++k) out.emplace_back(k, q);
  for (std::int64_t k = 0; k < q; ++k) {
    const RationalAngle t(2 * k + 1, 2 * q);
    if (t.value() >= 0.5) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

GraphArc curve_arc(const ParamCurve& c, double level, const std::string& tag) {
  GraphArc arc;
  arc.label.kind = ArcLabel::Kind::Equipotential;
  arc.label.level = level;
  arc.label.tag = tag + ":" + c.id;
  arc.polyline = c.points;
  return arc;
}

// The part of E_inf(level) in the closure of W(0) u S: external angle from 0
// on the S branch to 1 on the iS branch, continued in the angle.
Polyline para_equipotential_arc(double level, int samples) {
  const auto r0 = trace_parameter_ray(Quadrant::S, RationalAngle(0, 1), level);
  Polyline out{r0.samples.back().point};
  const auto top = solve_parameter_point(level, RationalAngle(0, 1), out.back());
  if (!top) fail(ErrorCode::MissingComponentData, "no parameter point on the equipotential");
  out.back() = *top;
  std::function<void(std::int64_t, std::int64_t, int)> step = [&](std::int64_t k,
                                                                  std::int64_t den, int depth) {
    const auto z = solve_parameter_point(level, RationalAngle(k, den), out.back());
    if (z && std::abs(*z - out.back()) < 0.1) {
      out.push_back(*z);
      return;
    }
    if (depth > 8) fail(ErrorCode::MissingComponentData, "equipotential continuation failed");
    step(2 * k - 1, 2 * den, depth + 1);
    step(2 * k, 2 * den, depth + 1);
  };
  for (int k = 1; k <= samples; ++k) step(k, samples, 0);
  return out;
}

}  // namespace

ParaGraph build_para_graph(DynGraph::Kind kind, int n, const GraphOptions& opt) {
  if (kind != DynGraph::Kind::Y)
    fail(ErrorCode::MissingComponentData,
         "parameter X graphs need internal parameter rays of capture components");
  ParaGraph out;
  out.depth = n;
  out.kind = kind;
  const double level = opt.log_r / pow3(n);

  {
    GraphArc e;
    e.label.kind = ArcLabel::Kind::Equipotential;
    e.label.level = level;
    e.label.tag = "inf";
    e.polyline = para_equipotential_arc(level, 256);
    out.arcs.push_back(std::move(e));
  }

  std::vector<std::pair<RationalAngle, Quadrant>> rays;
  for (const auto& t : para_graph_angles(n)) {
    rays.emplace_back(t, t.value() <= 0.75 ? Quadrant::S : Quadrant::iS);
    // angle 0 also bounds W(0) on the iS side
    if (t.num() == 0) rays.emplace_back(t, Quadrant::iS);
  }
  for (const auto& [t, q] : rays) {
    const auto tr = trace_parameter_ray(q, t, 1e-300);
    GraphArc arc;
    arc.label.kind = ArcLabel::Kind::ExternalRay;
    arc.label.angle = t;
    arc.label.tag = quadrant_name(q);
    arc.depth = n;
    for (const auto& s : tr.samples)
      if (s.log_r <= level) {
        if (arc.polyline.empty()) {
          const auto top = solve_parameter_point(level, t, s.point);
          if (top) arc.polyline.push_back(*top);
        }
        arc.polyline.push_back(s.point);
      }
    arc.polyline.push_back(tr.landing.point);
    if (tr.landing.kind == Landing::Kind::Landed) arc.landing = tr.landing.point;
    const char* verdict = tr.landing.kind == Landing::Kind::Landed    ? "Landed"
                          : tr.landing.kind == Landing::Kind::Crashed ? "Crashed"
                                                                      : "Truncated";
    out.notes.push_back("R(" + t.str() + ") on branch " + quadrant_name(q) + ": " + verdict);
    out.arcs.push_back(std::move(arc));
  }

  // U0
  const auto u0 = n == 0 ? parameter_e0_u0() : parameter_equipotential_u0(n);
  for (const auto& c : u0) out.arcs.push_back(curve_arc(c, n, "U0"));

  // capture components of depth k <= n with centres in the closure of W(0) u S
  for (int k = 1; k <= n; ++k) {
    for (cplx centre : solve_critical_relation(OrbitTarget::CPlus, k, Window{-2.5, 2.5, 0, 2.5})) {
      const auto v = capture_depth(centre, k);
      if (v.kind != CaptureVerdict::Kind::Capture || v.n != k) continue;
      const bool in_s = centre.real() >= 0 && centre.imag() >= 0;
      if (!in_s && !wake_test(centre)) continue;
      std::ostringstream tag;
      tag.precision(6);
      tag << "U" << k << "@" << centre.real() << (centre.imag() < 0 ? "" : "+") << centre.imag()
          << "i";
      if (n == k) {
        out.arcs.push_back(curve_arc(capture_equipotential(centre, k), 0, tag.str()));
      } else {
        for (const auto& c : capture_equipotential_level(centre, k, n - k))
          out.arcs.push_back(curve_arc(c, n - k, tag.str()));
      }
      out.notes.push_back("capture component " + tag.str());
    }
  }
  for (auto& arc : out.arcs) arc.depth = n;
  return out;
}

int arc_clusters(const std::vector<GraphArc>& arcs, double tol) {
  const std::size_t n = arcs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  auto touches = [&](const Polyline& u, const Polyline& v) {
    for (cplx p : {u.front(), u.back()})
      for (std::size_t k = 0; k + 1 < v.size(); ++k)
        if (segment_distance(p, v[k], v[k + 1]) < tol) return true;
    return false;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& u = arcs[i].polyline;
      const auto& v = arcs[j].polyline;
      if (u.size() < 2 || v.size() < 2) continue;
      if (touches(u, v) || touches(v, u)) parent[find(i)] = find(j);
    }
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) roots.insert(find(i));
  return int(roots.size());
}

std::string pieces_to_json(const PuzzleMap& map) {
  nlohmann::json out;
  out["depth"] = map.graph().depth;
  out["a"] = {map.graph().a.real(), map.graph().a.imag()};
  out["pieces"] = nlohmann::json::array();
  for (const auto& p : map.pieces()) {
    nlohmann::json v = nlohmann::json::array();
    for (cplx z : p.polygon) v.push_back({z.real(), z.imag()});
    out["pieces"].push_back({{"depth", p.depth},
                             {"piece_id", p.id},
                             {"boundary", p.boundary_labels},
                             {"vertices", v},
                             {"diameter", p.diameter},
                             {"pixels", p.pixels}});
  }
  return out.dump();
}

std::string nesting_to_csv(const std::vector<NestingRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "depth,critical_piece,contained,compact_inside,diameter\n";
  for (const auto& r : rows)
    os << r.depth << "," << r.critical_piece << "," << r.contained << "," << r.compact_inside
       << "," << r.diameter << "\n";
  return os.str();
}

}  // namespace per1
