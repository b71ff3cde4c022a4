#include "per1/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace per1 {

const FatouCoordinate& model_coordinate() {
  static const FatouCoordinate fc = FatouCoordinate::model();
  return fc;
}

cplx model_fatou(cplx z) { return model_coordinate()(z); }
cplx model_petal_inverse(cplx w) { return model_coordinate().petal_inverse(w); }

namespace {

constexpr cplx kI(0.0, 1.0);

cplx critical_point(const FatouCoordinate& fc) {
  return fc.is_model() ? cplx(0.0) : critical_points(fc.a()).plus;
}

// Preimages of map(x) other than x.
std::vector<cplx> other_preimages(const FatouCoordinate& fc, cplx x) {
  if (fc.is_model()) return {-x};
  // f(y) - f(x) = (y - x)(y^2 + (x + a) y + x^2 + a x + 1)
  const cplx a = fc.a(), b = x + a, c = x * (x + a) + 1.0;
  const cplx d = std::sqrt(b * b - 4.0 * c);
  const cplx q = -0.5 * (b + (std::real(std::conj(b) * d) >= 0 ? d : -d));
  if (q == 0.0) return {0.0, 0.0};
  return {q, c / q};
}

std::optional<cplx> newton_preimage(const FatouCoordinate& fc, cplx p, cplx x) {
  for (int it = 0; it < 40; ++it) {
    const cplx d = fc.map_derivative(x);
    if (d == 0.0) return std::nullopt;
    const cplx dx = (fc.map(x) - p) / d;
    x -= dx;
    if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) return x;
  }
  if (std::abs(fc.map(x) - p) < 1e-12 * std::max(1.0, std::abs(p))) return x;
  return std::nullopt;
}

// Follow one preimage from x over the segment p0 -> p1, shortening the step
// while another preimage is as close as the one being followed.
cplx track_segment(const FatouCoordinate& fc, cplx x, cplx p0, cplx p1) {
  double u = 0, h = 1;
  while (u < 1) {
    h = std::min(h, 1 - u);
    const cplx target = p0 + (p1 - p0) * (u + h);
    const auto y = newton_preimage(fc, target, x);
    bool ok = false;
    if (y) {
      const double self = std::abs(*y - x);
      double other = std::numeric_limits<double>::infinity();
      for (cplx o : other_preimages(fc, *y)) other = std::min(other, std::abs(o - x));
      ok = other > 2 * self;
    }
    if (ok) {
      x = *y;
      u += h;
      h *= 2;
    } else {
      h *= 0.5;
      if (h < 0x1p-44)
        fail(ErrorCode::RayHitsCriticalValue, "curve passes through a critical value");
    }
  }
  return x;
}

cplx iterate(const FatouCoordinate& fc, cplx z, int n) {
  for (int i = 0; i < n; ++i) z = fc.map(z);
  return z;
}

// Polish x with f^n(x) = target by Newton.
cplx polish_preimage(const FatouCoordinate& fc, cplx x, cplx target, int n) {
  for (int it = 0; it < 30; ++it) {
    cplx z = x, d = 1.0;
    for (int i = 0; i < n; ++i) {
      d *= fc.map_derivative(z);
      z = fc.map(z);
    }
    if (d == 0.0) break;
    const cplx dx = (z - target) / d;
    x -= dx;
    if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

cplx template_L(const InternalAngle& t, double u) {
  const cplx start(1.0, t.sign);
  return start + u * (cplx(-(t.l - 1), 0) - start);
}

// L' is the half circle on the segment [0, i], to the right of it.
cplx template_Lprime(const InternalAngle& t, double u) {
  const cplx w = 0.5 * kI - 0.5 * kI * std::exp(kI * (M_PI * u));
  return t.sign > 0 ? w : std::conj(w);
}

// delta = (L part through the Fatou continuation) + (L' part in the other
// lobe, pulled back l-1 times along the anchored branch).
Polyline build_delta(const FatouCoordinate& fc, const InternalAngle& t,
                     const InternalRayOptions& opt) {
  const int k = t.l;
  const cplx c = critical_point(fc);
  Polyline out;
  {
    cplx z = fc.petal_inverse(template_L(t, 0));
    out.push_back(z);
    for (int j = 1; j <= opt.samples_L; ++j) {
      const double u0 = double(j - 1) / opt.samples_L, u1 = double(j) / opt.samples_L;
      z = fc.continue_inverse(z, template_L(t, u0), template_L(t, u1));
      out.push_back(z);
    }
    // the end point is the branch preimage of c after k-1 steps
    out.back() = polish_preimage(fc, out.back(), c, k - 1);
  }
  const cplx E = out.back();

  Polyline image{fc.map(c)};
  cplx q = fc.petal_inverse(template_Lprime(t, 1.0 / opt.samples_Lprime));
  cplx y1 = 0;
  {
    double best = 1e300;
    for (cplx o : other_preimages(fc, q))
      if (std::abs(o - (2.0 * c - q)) < best) {
        best = std::abs(o - (2.0 * c - q));
        y1 = o;
      }
  }
  image.push_back(fc.map(q));
  for (int j = 2; j <= opt.samples_Lprime; ++j) {
    const double u0 = double(j - 1) / opt.samples_Lprime, u1 = double(j) / opt.samples_Lprime;
    q = fc.continue_inverse(q, template_Lprime(t, u0), template_Lprime(t, u1));
    image.push_back(fc.map(q));
  }
  Polyline lobe = lift_polyline(fc, image, c, y1);
  for (int m = 1; m <= k - 1; ++m) lobe = lift_polyline(fc, lobe, iterate(fc, E, k - 1 - m));
  out.insert(out.end(), lobe.begin() + 1, lobe.end());
  return out;
}

InternalRay build_ray(const FatouCoordinate& fc, const InternalAngle& t, int n_links,
                      const InternalRayOptions& opt) {
  if (t.l < 2) fail(ErrorCode::InvalidArgument, "internal angle needs l >= 2");
  InternalRay ray;
  ray.angle = t;
  try {
    ray.links.push_back(build_delta(fc, t, opt));
  } catch (const DomainError& e) {
    fail(ErrorCode::RayHitsCriticalValue, std::string("seed segment: ") + e.what());
  }
  for (int n = 1; n <= n_links; ++n) {
    const Polyline& prev = ray.links.back();
    const cplx F = prev.back();
    // G = (branch)^(l-1) o (other branch); every lift is anchored at the
    // forward images of the previous end point, since G(start) = end.
    Polyline cur = prev;
    try {
      for (int m = t.l - 1; m >= 0; --m) cur = lift_polyline(fc, cur, iterate(fc, F, m));
    } catch (const DomainError& e) {
      fail(ErrorCode::RayHitsCriticalValue, "link " + std::to_string(n) + ": " + e.what());
    }
    ray.links.push_back(std::move(cur));
  }
  ray.tail = ray.links.back().back();
  return ray;
}

}  // namespace

Polyline lift_polyline(const FatouCoordinate& fc, const Polyline& curve, cplx x0,
                       std::optional<cplx> x1) {
  Polyline out{x0};
  if (curve.size() < 2) return out;
  std::size_t j = 1;
  if (x1) {
    out.push_back(*x1);
    j = 2;
  }
  for (; j < curve.size(); ++j) out.push_back(track_segment(fc, out.back(), curve[j - 1], curve[j]));
  return out;
}

InternalAngle InternalAngle::parse(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) fail(ErrorCode::InvalidArgument, "angle must be p/q: " + s);
  long long p = 0, q = 0;
  try {
    p = std::stoll(s.substr(0, slash));
    q = std::stoll(s.substr(slash + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "angle must be p/q: " + s);
  }
  int l = 0;
  while (l < 62 && ((1LL << l) - 1) < q) ++l;
  if (l < 2 || ((1LL << l) - 1) != q)
    fail(ErrorCode::InvalidArgument, "denominator must be 2^l - 1 with l >= 2: " + s);
  InternalAngle t;
  t.l = l;
  if (p == 1)
    t.sign = 1;
  else if (p == -1 || p == q - 1)
    t.sign = -1;
  else
    fail(ErrorCode::InvalidArgument, "only angles +-1/(2^l - 1) are generators: " + s);
  return t;
}

RationalAngle InternalAngle::rational() const {
  const std::int64_t q = (std::int64_t(1) << l) - 1;
  return sign > 0 ? RationalAngle(1, q) : RationalAngle(q - 1, q);
}

std::string InternalAngle::str() const {
  return (sign > 0 ? "1/" : "-1/") + std::to_string((1LL << l) - 1);
}

InternalRay model_internal_ray(const InternalAngle& theta, int n_links, const InternalRayOptions& opt) {
  return build_ray(model_coordinate(), theta, n_links, opt);
}

InternalRay dynamical_internal_ray(cplx a, const InternalAngle& theta, int n_links,
                                   const InternalRayOptions& opt) {
  const FatouCoordinate fc(a);
  return build_ray(fc, theta, n_links, opt);
}

namespace {

// Upper arc of E(0): phi = 1 + iy, y from 0 to 1e3, then the parabolic point.
const Polyline& model_e0_upper(int samples) {
  static thread_local int cached_n = -1;
  static thread_local Polyline arc;
  if (cached_n == samples) return arc;
  const auto& fc = model_coordinate();
  const double tmax = std::asinh(1e3);
  arc.clear();
  cplx z = 0.25;
  arc.push_back(z);
  cplx W = 1.0;
  for (int j = 1; j < samples; ++j) {
    const cplx Wn(1.0, std::sinh(tmax * j / (samples - 1)));
    z = fc.continue_inverse(z, W, Wn);
    W = Wn;
    arc.push_back(z);
  }
  arc.push_back(0.5);
  cached_n = samples;
  return arc;
}

}  // namespace

std::vector<Polyline> model_equipotential(int n, int samples) {
  if (n < 0 || n > 8) fail(ErrorCode::InvalidArgument, "model equipotential depth must be 0..8");
  if (samples < 8) fail(ErrorCode::InvalidArgument, "too few samples");
  const Polyline& up = model_e0_upper(samples);
  Polyline down(up.size());
  std::transform(up.begin(), up.end(), down.begin(), [](cplx z) { return std::conj(z); });
  std::vector<Polyline> arcs{up, down};
  const auto& fc = model_coordinate();
  for (int level = 1; level <= n; ++level) {
    std::vector<Polyline> next;
    for (const auto& arc : arcs) {
      if (level == 1) {
        // arcs start at the critical value; the two lifts leave 0 opposite ways
        const cplx r = std::sqrt(arc[1] - 0.25);
        next.push_back(lift_polyline(fc, arc, 0.0, r));
        next.push_back(lift_polyline(fc, arc, 0.0, -r));
      } else {
        const cplx r = std::sqrt(arc[0] - 0.25);
        next.push_back(lift_polyline(fc, arc, r));
        next.push_back(lift_polyline(fc, arc, -r));
      }
    }
    arcs = std::move(next);
  }
  return arcs;
}

const char* side_name(Side s) {
  switch (s) {
    case Side::Plus: return "Xi+";
    case Side::Minus: return "Xi-";
    case Side::Lobe: return "lobe";
    case Side::Critical: return "critical";
  }
  return "?";
}

// Closed curve through the two lobe axes of the figure eight, closed off by
// the external rays landing at 0 and at the other end of the second lobe.
// Every point of the immediate basin off the eight is on the Xi+ or Xi- side.
struct ConjugacyLifter::Separator {
  Polyline gamma;
  bool plus_parity = false;
};

ConjugacyLifter::ConjugacyLifter(cplx a) : a_(a), fc_(a) {}
ConjugacyLifter::~ConjugacyLifter() = default;

namespace {

bool odd_crossings(const Polyline& poly, cplx x) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const cplx p = poly[i], q = poly[j];
    if ((p.imag() > x.imag()) != (q.imag() > x.imag())) {
      const double xr = p.real() + (x.imag() - p.imag()) * (q.real() - p.real()) / (q.imag() - p.imag());
      if (x.real() < xr) inside = !inside;
    }
  }
  return inside;
}

double distance_to_polyline(const Polyline& poly, cplx x) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const cplx p = poly[i], d = poly[i + 1] - p;
    const double len2 = std::norm(d);
    double u = len2 > 0 ? std::real((x - p) * std::conj(d)) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    best = std::min(best, std::abs(x - (p + u * d)));
  }
  return best;
}

}  // namespace

void ConjugacyLifter::build() const {
  if (sep_) return;
  auto sep = std::make_unique<Separator>();
  const cplx c = critical_points(a_).plus;

  // A path in the petal from c+ (t -> 0) to 0 (t -> infinity) with
  // phi = t (1 + i eta), and its lift into the second lobe. The real axis
  // eta = 0 is tried first; when v- sits in the image lobe on that path the
  // lift runs into c- and a tilted path is used.
  const double T = 2 * fc_.sector_threshold();
  std::vector<double> ts;
  const int nin = 150;
  for (int j = nin; j >= 0; --j) ts.push_back(T * std::pow(1e-5 / T, double(j) / nin));
  for (int m = 1; m <= 40; ++m) ts.push_back(T * std::pow(2.0, m));
  Polyline axis, lobe;
  for (double eta : {0.0, 0.25, -0.25}) {
    const cplx dir(1.0, eta);
    axis.clear();
    cplx z = fc_.petal_inverse(ts.front() * dir);
    axis.push_back(z);
    for (std::size_t j = 1; j < ts.size(); ++j) {
      z = ts[j] > T ? fc_.petal_inverse(ts[j] * dir)
                    : fc_.continue_inverse(z, ts[j - 1] * dir, ts[j] * dir);
      axis.push_back(z);
    }
    Polyline image{fc_.map(c)};
    for (cplx p : axis) image.push_back(fc_.map(p));
    image.push_back(0.0);
    cplx y1 = 0;
    double best = 1e300;
    for (cplx o : other_preimages(fc_, axis.front()))
      if (std::abs(o - (2.0 * c - axis.front())) < best) {
        best = std::abs(o - (2.0 * c - axis.front()));
        y1 = o;
      }
    try {
      lobe = lift_polyline(fc_, image, c, y1);
      break;
    } catch (const DomainError&) {
      lobe.clear();
    }
  }
  if (lobe.empty()) fail(ErrorCode::SideUndecided, "second lobe path meets the free critical point");
  const cplx x1 = lobe.back();

  // external rays: one fixed ray landing at 0, one preimage landing at x1
  auto trace_to = [&](const std::vector<RationalAngle>& angles, cplx target) {
    RayTrace best_ray;
    double best_d = 1e300;
    // a ray crashing on the escaping critical point is replaced by the ray
    // of a nearby parameter, which passes the critical point on one side
    for (double eps : {0.0, 1e-10, -1e-10})
      for (const auto& t : angles) {
        auto r = trace_dynamical_ray(a_ + cplx(0, eps), t, 1e-60);
        if (r.landing.kind != Landing::Kind::Landed) continue;
        const double d = std::abs(r.landing.point - target);
        if (d < best_d) {
          best_d = d;
          best_ray = std::move(r);
        }
      }
    if (best_d > 0.1) fail(ErrorCode::SideUndecided, "no external ray lands near the eight");
    return best_ray;
  };
  const RayTrace r0 = trace_to({RationalAngle(0, 1), RationalAngle(1, 2)}, 0.0);
  const RayTrace r1 = trace_to({r0.angle + RationalAngle(1, 3), r0.angle + RationalAngle(2, 3)}, x1);

  Polyline& g = sep->gamma;
  for (const auto& s : r0.samples) g.push_back(s.point);
  g.push_back(0.0);
  for (auto it = axis.rbegin(); it != axis.rend(); ++it) g.push_back(*it);
  g.push_back(c);
  for (std::size_t i = 1; i < lobe.size(); ++i) g.push_back(lobe[i]);
  for (auto it = r1.samples.rbegin(); it != r1.samples.rend(); ++it) g.push_back(it->point);
  double rmax = 0;
  for (cplx z : g) rmax = std::max(rmax, std::abs(z));
  const double R = 4 * rmax;
  const double th1 = std::arg(r1.samples.front().point), th0 = std::arg(r0.samples.front().point);
  double sweep = th0 - th1;
  while (sweep <= 0) sweep += kTwoPi;
  for (int j = 0; j <= 64; ++j) g.push_back(std::polar(R, th1 + sweep * j / 64));

  // Xi+ is the side along the petal boundary arc with Im phi > 0
  const cplx ref = fc_.continue_inverse(fc_.petal_inverse(cplx(0.5, 2)), cplx(0.5, 2), cplx(-0.5, 2));
  sep->plus_parity = odd_crossings(g, ref);
  sep_ = std::move(sep);
}

const Polyline& ConjugacyLifter::separator() const {
  build();
  return sep_->gamma;
}

Side ConjugacyLifter::side(cplx x) const {
  build();
  if (distance_to_polyline(sep_->gamma, x) < 1e-6)
    fail(ErrorCode::SideUndecided, "point within tolerance of the figure eight");
  return odd_crossings(sep_->gamma, x) == sep_->plus_parity ? Side::Plus : Side::Minus;
}

ConjugacyLift ConjugacyLifter::lift(cplx z) const {
  constexpr int kBudget = 10000;
  const int ns = fc_.sector_entry(z, kBudget);
  if (ns < 0) {
    if (escape_classify(a_, z, kBudget).escaped) fail(ErrorCode::NotInBasin, "orbit escapes");
    fail(ErrorCode::OrbitBudget, "orbit did not reach the petal");
  }
  std::vector<cplx> orbit{z};
  for (int j = 0; j < ns; ++j) orbit.push_back(fc_.map(orbit.back()));
  int hi = ns;
  while (!fc_.in_petal(orbit[hi])) {
    if (hi > ns + 64) fail(ErrorCode::OrbitBudget, "sector point not certified in the petal");
    orbit.push_back(fc_.map(orbit.back()));
    ++hi;
  }
  // petal membership is forward invariant: bisect for the first entry
  int lo = -1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (fc_.in_petal(orbit[mid]))
      hi = mid;
    else
      lo = mid;
  }
  ConjugacyLift out;
  out.a = a_;
  out.k = hi;
  const cplx phik = fc_(orbit[hi]);
  cplx zeta = model_petal_inverse(phik);
  for (int j = hi - 1; j >= 0; --j) {
    const cplx r = std::sqrt(zeta - 0.25);
    Side s;
    cplx next;
    if (std::abs(r) < 1e-7) {
      s = Side::Critical;
      next = r;
    } else if (j == hi - 1 && phik.real() > 1) {
      if (std::abs(phik.real() - 1) < 1e-9) fail(ErrorCode::SideUndecided, "on the eight");
      s = Side::Lobe;
      next = r.real() < 0 ? r : -r;
    } else {
      s = side(orbit[j]);
      next = (r.imag() > 0) == (s == Side::Plus) ? r : -r;
    }
    out.sides.push_back(s);
    zeta = next;
  }
  out.value = zeta;
  return out;
}

ConjugacyLift lift_to_model(cplx a, cplx z) { return ConjugacyLifter(a).lift(z); }

cplx phi_adjacent(cplx a) {
  CapturePolicy p;
  const auto v = capture_depth(a, 0, p);
  if (v.kind != CaptureVerdict::Kind::Adjacent) fail(ErrorCode::NotAdjacent, "a is not in H0");
  return lift_to_model(a, critical_values(a).minus).value;
}

cplx phi_capture(cplx a, int n) {
  const auto v = capture_depth(a, n);
  if (v.kind != CaptureVerdict::Kind::Capture || v.n != n)
    fail(ErrorCode::WrongDepth, "capture depth differs from " + std::to_string(n));
  cplx z = critical_points(a).minus;
  for (int i = 0; i <= n; ++i) z = f(a, z);
  return lift_to_model(a, z).value;
}

std::string polylines_to_jsonl(const std::vector<std::pair<std::string, Polyline>>& curves) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [id, pts] : curves)
    for (std::size_t i = 0; i < pts.size(); ++i)
      os << "{\"curve_id\":\"" << id << "\",\"seq\":" << i << ",\"re\":" << pts[i].real()
         << ",\"im\":" << pts[i].imag() << "}\n";
  return os.str();
}

}  // namespace per1
