#include "per1/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "per1/boettcher.hpp"
#include "per1/fatou.hpp"
#include "per1/puzzle.hpp"

namespace per1 {

const char* region_kind_name(RegionLabel::Kind k) {
  switch (k) {
    case RegionLabel::Kind::Escape: return "escape";
    case RegionLabel::Kind::Adjacent: return "adjacent";
    case RegionLabel::Kind::Capture: return "capture";
    case RegionLabel::Kind::Basin: return "basin";
    case RegionLabel::Kind::Petal: return "petal";
    case RegionLabel::Kind::Undetermined: return "undetermined";
  }
  return "?";
}

namespace {

using Kind = RegionLabel::Kind;

// Trapping sector in w = -1/(a z), where the map is w -> w + 1 + A/w + ...
// with A = 1 - 1/a^2; below 4|A| the sector need not be forward invariant.
double sector_radius(cplx a, double w0) { return std::max(w0, 4 * std::abs(1.0 - 1.0 / (a * a))); }

bool in_sector(cplx a, cplx z, double w0) {
  if (z == 0.0) return false;
  const cplx w = -1.0 / (a * z);
  return w.real() > w0 && std::abs(w.imag()) < w.real();
}

// Escape of either critical orbit, or Basin once c- enters the attracting
// sector at 0. Basin here only means a is in some H_n.
RegionLabel parameter_orbit(cplx a, const RasterBudgets& b) {
  RegionLabel out;
  if (a == 0.0) return out;
  const double R = escape_radius(a, b.escape_floor), r2 = R * R;
  const CriticalPair c = critical_points(a);
  const double w0 = sector_radius(a, b.sector_w0);
  cplx zm = c.minus, zp = c.plus;
  bool plus_done = false;
  // c- creeps in along the direction of z^3 until |z| ~ |a|, about 1/|a|^2 steps
  const double creep = std::min(1e7, 16.0 / std::norm(a));
  const int N = std::max({b.escape_iter, b.basin_iter, int(creep)});
  for (int n = 0; n <= N; ++n) {
    const cplx fm = f(a, zm);
    if (std::norm(zm) > r2 && std::norm(fm) > std::norm(zm)) return {Kind::Escape, n};
    if (!plus_done) {
      const cplx fp = f(a, zp);
      if (std::norm(zp) > r2 && std::norm(fp) > std::norm(zp)) return {Kind::Escape, n};
      plus_done = in_sector(a, zp, w0);
      zp = fp;
    }
    if (in_sector(a, zm, w0)) return {Kind::Basin, n};
    zm = fm;
  }
  return out;
}

// Basin points are refined to Petal with the maximal petal of fc when given.
RegionLabel dynamical_orbit(cplx a, cplx z, const RasterBudgets& b, const FatouCoordinate* fc) {
  const double R = escape_radius(a, b.escape_floor), r2 = R * R;
  if (z == 0.0) return {Kind::Petal, 0};  // the parabolic point, on the petal boundary
  const double w0 = a == 0.0 ? 0.0 : sector_radius(a, b.sector_w0);
  const cplx z0 = z;
  const int N = std::max(b.escape_iter, b.basin_iter);
  for (int n = 0; n <= N; ++n) {
    const cplx w = f(a, z);
    if (std::norm(z) > r2 && std::norm(w) > std::norm(z)) return {Kind::Escape, n};
    if (a != 0.0 && in_sector(a, z, w0)) {
      if (n == 0 || (fc && fc->in_petal(z0))) return {Kind::Petal, n};
      return {Kind::Basin, n};
    }
    z = w;
  }
  return {};
}

std::optional<FatouCoordinate> petal_coordinate(cplx a, const RasterBudgets& b) {
  if (a == 0.0) return std::nullopt;
  FatouPolicy p;
  p.sector_w0 = b.sector_w0;
  p.escape_floor = b.escape_floor;
  try {
    return FatouCoordinate(a, p);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

// The capture depth is invariant under a -> conj a and a -> -a; it is
// evaluated at the representative in the closed first quadrant.
RegionLabel capture_label(cplx a, const RasterBudgets& b) {
  const cplx rep(std::abs(a.real()), std::abs(a.imag()));
  CapturePolicy p;
  p.sector_w0 = b.sector_w0;
  p.basin_iter = std::max(p.basin_iter, b.basin_iter);
  try {
    const CaptureVerdict v = capture_depth(rep, b.capture_depth, p);
    if (v.kind == CaptureVerdict::Kind::Adjacent) return {Kind::Adjacent, 0};
    if (v.kind == CaptureVerdict::Kind::Capture) return {Kind::Capture, v.n};
  } catch (const DomainError&) {
  }
  return {};
}

// Total order used when labels compete for a pixel.
int rank(const RegionLabel& l) {
  switch (l.kind) {
    case Kind::Adjacent: return 0;
    case Kind::Capture: return 1 + l.n;
    default: return 1 << 20;
  }
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) body(i);
    });
  for (auto& th : pool) th.join();
}

struct Grid {
  int W, H;
  std::size_t id(int i, int j) const { return std::size_t(j) * W + i; }
  template <class F>
  void neighbours(std::size_t p, F&& fn) const {
    const int i = int(p % W), j = int(p / W);
    if (i > 0) fn(p - 1);
    if (i + 1 < W) fn(p + 1);
    if (j > 0) fn(p - W);
    if (j + 1 < H) fn(p + W);
  }
};

// Capture depths for the basin pixels. Pixels whose neighbours are all in
// the basin form the core; core components are split at one-pixel pinches, so
// that components of H touching at a point are kept apart. Each core
// component is decided at its deepest pixel and the rim is grown back in
// layers.
void resolve_captures(const RasterJob& job, int W, int H, std::vector<RegionLabel>& labels) {
  const Grid g{W, H};
  const std::size_t N = labels.size();
  std::vector<char> basin(N), core(N);
  for (std::size_t p = 0; p < N; ++p) basin[p] = labels[p].kind == Kind::Basin;
  for (std::size_t p = 0; p < N; ++p) {
    if (!basin[p]) continue;
    int k = 0, m = 0;
    g.neighbours(p, [&](std::size_t q) {
      k += basin[q];
      ++m;
    });
    core[p] = k == m;
  }
  // basin components with no core are seeds as a whole
  std::vector<int> comp(N, -1);
  std::vector<std::size_t> stack;
  auto flood = [&](std::size_t s, int id, const std::vector<char>& mask, std::vector<std::size_t>* out) {
    comp[s] = id;
    stack.assign(1, s);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      if (out) out->push_back(p);
      g.neighbours(p, [&](std::size_t q) {
        if (mask[q] && comp[q] < 0) {
          comp[q] = id;
          stack.push_back(q);
        }
      });
    }
  };
  {
    int id = 0;
    std::vector<std::size_t> members;
    for (std::size_t p = 0; p < N; ++p) {
      if (!basin[p] || comp[p] >= 0) continue;
      members.clear();
      flood(p, id++, basin, &members);
      if (std::none_of(members.begin(), members.end(), [&](std::size_t q) { return core[q]; }))
        for (std::size_t q : members) core[q] = 1;
    }
  }
  std::fill(comp.begin(), comp.end(), -1);
  std::vector<std::vector<std::size_t>> seeds;
  for (std::size_t p = 0; p < N; ++p) {
    if (!core[p] || comp[p] >= 0) continue;
    seeds.emplace_back();
    flood(p, int(seeds.size()) - 1, core, &seeds.back());
  }

  // deepest pixel of each seed; ties go to the smallest |Re|, then |Im|
  std::vector<int> depth(N, -1);
  std::vector<cplx> reps(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    std::vector<std::size_t> front;
    for (std::size_t p : seeds[s]) {
      bool edge = false;
      g.neighbours(p, [&](std::size_t q) { edge |= comp[q] != int(s); });
      if (edge) {
        depth[p] = 0;
        front.push_back(p);
      }
    }
    int d = 0;
    std::vector<std::size_t> deepest = front;
    while (!front.empty()) {
      deepest = front;
      std::vector<std::size_t> next;
      ++d;
      for (std::size_t p : front)
        g.neighbours(p, [&](std::size_t q) {
          if (comp[q] == int(s) && depth[q] < 0) {
            depth[q] = d;
            next.push_back(q);
          }
        });
      front = std::move(next);
    }
    cplx best;
    bool have = false;
    for (std::size_t p : deepest) {
      const cplx z = pixel_centre(job.window, W, H, int(p % W), int(p / W));
      const cplx key(std::abs(z.real()), std::abs(z.imag()));
      if (!have || key.real() < best.real() ||
          (key.real() == best.real() && key.imag() < best.imag())) {
        best = key;
        have = true;
      }
    }
    reps[s] = best;
  }
  std::vector<RegionLabel> verdict(seeds.size());
  parallel_for(int(seeds.size()), job.threads,
               [&](int s) { verdict[s] = capture_label(reps[s], job.budgets); });
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t p : seeds[s]) labels[p] = verdict[s];

  // grow into the rim; a pixel reached from several labels takes the least
  std::vector<char> done(N), queued(N);
  for (std::size_t p = 0; p < N; ++p) done[p] = !basin[p] || core[p];
  std::vector<std::size_t> layer;
  for (std::size_t p = 0; p < N; ++p) {
    if (done[p]) continue;
    bool touch = false;
    g.neighbours(p, [&](std::size_t q) { touch |= core[q] != 0; });
    if (touch) {
      layer.push_back(p);
      queued[p] = 1;
    }
  }
  while (!layer.empty()) {
    std::vector<RegionLabel> pick(layer.size());
    for (std::size_t k = 0; k < layer.size(); ++k) {
      int best = std::numeric_limits<int>::max();
      g.neighbours(layer[k], [&](std::size_t q) {
        if (basin[q] && done[q] && rank(labels[q]) < best) {
          best = rank(labels[q]);
          pick[k] = labels[q];
        }
      });
    }
    for (std::size_t k = 0; k < layer.size(); ++k) {
      labels[layer[k]] = pick[k];
      done[layer[k]] = 1;
    }
    std::vector<std::size_t> next;
    for (std::size_t p : layer)
      g.neighbours(p, [&](std::size_t q) {
        if (!done[q] && !queued[q]) {
          queued[q] = 1;
          next.push_back(q);
        }
      });
    std::sort(next.begin(), next.end());
    layer = std::move(next);
  }
}

void stroke(Image& img, const Window& w, const Overlay& ov) {
  auto px = [&](cplx z) {
    return std::pair<double, double>{
        (z.real() - w.re_min) / (w.re_max - w.re_min) * img.width - 0.5,
        (w.im_max - z.imag()) / (w.im_max - w.im_min) * img.height - 0.5};
  };
  auto plot = [&](long i, long j) {
    if (i < 0 || j < 0 || i >= img.width || j >= img.height) return;
    auto* p = &img.rgb[3 * (std::size_t(j) * img.width + i)];
    p[0] = ov.color[0];
    p[1] = ov.color[1];
    p[2] = ov.color[2];
  };
  const double limit = 4.0 * (img.width + img.height);
  for (const auto& curve : ov.curves)
    for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
      auto [x0, y0] = px(curve[k]);
      auto [x1, y1] = px(curve[k + 1]);
      if (!std::isfinite(x0) || !std::isfinite(x1) || !std::isfinite(y0) || !std::isfinite(y1)) continue;
      if (std::abs(x0) > limit || std::abs(x1) > limit || std::abs(y0) > limit || std::abs(y1) > limit)
        continue;
      long i0 = std::lround(x0), j0 = std::lround(y0);
      const long i1 = std::lround(x1), j1 = std::lround(y1);
      const long di = std::abs(i1 - i0), dj = -std::abs(j1 - j0);
      const long si = i0 < i1 ? 1 : -1, sj = j0 < j1 ? 1 : -1;
      long err = di + dj;
      for (;;) {
        plot(i0, j0);
        if (i0 == i1 && j0 == j1) break;
        const long e2 = 2 * err;
        if (e2 >= dj) {
          err += dj;
          i0 += si;
        }
        if (e2 <= di) {
          err += di;
          j0 += sj;
        }
      }
    }
}

Image render_plain(const RasterJob& job) {
  const int W = job.width, H = job.height;
  if (W < 1 || H < 1) fail(ErrorCode::InvalidArgument, "raster needs a positive size");
  if (!(job.window.re_max > job.window.re_min && job.window.im_max > job.window.im_min))
    fail(ErrorCode::InvalidArgument, "empty window");
  Image img;
  img.width = W;
  img.height = H;
  img.labels.resize(std::size_t(W) * H);
  std::optional<FatouCoordinate> fc;
  if (job.mode == RasterMode::Dynamical) fc = petal_coordinate(job.a, job.budgets);
  parallel_for(H, job.threads, [&](int j) {
    for (int i = 0; i < W; ++i) {
      const cplx z = pixel_centre(job.window, W, H, i, j);
      img.labels[std::size_t(j) * W + i] = job.mode == RasterMode::Parameter
                                               ? parameter_orbit(z, job.budgets)
                                               : dynamical_orbit(job.a, z, job.budgets, fc ? &*fc : nullptr);
    }
  });
  if (job.mode == RasterMode::Parameter) resolve_captures(job, W, H, img.labels);
  img.rgb.resize(3 * img.labels.size());
  for (std::size_t p = 0; p < img.labels.size(); ++p) {
    const Rgb c = palette_color(img.labels[p]);
    std::copy(c.begin(), c.end(), img.rgb.begin() + 3 * p);
  }
  return img;
}

}  // namespace

RegionLabel classify_pixel(RasterMode mode, cplx point, const RasterBudgets& budgets, cplx a) {
  if (mode == RasterMode::Dynamical) {
    const auto fc = petal_coordinate(a, budgets);
    return dynamical_orbit(a, point, budgets, fc ? &*fc : nullptr);
  }
  const RegionLabel l = parameter_orbit(point, budgets);
  if (l.kind != Kind::Basin) return l;
  return capture_label(point, budgets);
}

cplx pixel_centre(const Window& w, int width, int height, int i, int j) {
  const double tx = double(2 * i + 1 - width) / double(2 * width);
  const double ty = double(2 * j + 1 - height) / double(2 * height);
  return {0.5 * (w.re_min + w.re_max) + tx * (w.re_max - w.re_min),
          0.5 * (w.im_min + w.im_max) - ty * (w.im_max - w.im_min)};
}

Rgb Image::at(int i, int j) const {
  const auto* p = &rgb[3 * (std::size_t(j) * width + i)];
  return {p[0], p[1], p[2]};
}

Rgb palette_color(const RegionLabel& l) {
  static constexpr Rgb kEscape[8] = {{16, 24, 64},  {28, 40, 96},   {44, 60, 128}, {64, 84, 156},
                                     {90, 110, 180}, {120, 140, 200}, {150, 170, 216}, {186, 200, 230}};
  static constexpr Rgb kCapture[4] = {{80, 200, 90}, {140, 220, 100}, {190, 232, 120}, {225, 244, 170}};
  switch (l.kind) {
    case Kind::Escape: return kEscape[(l.n / 2) % 8];
    case Kind::Adjacent: return {0, 140, 60};
    case Kind::Capture: return kCapture[std::clamp(l.n, 1, 4) - 1];
    case Kind::Basin: return {0, 150, 70};
    case Kind::Petal: return {0, 90, 40};
    case Kind::Undetermined: return {0, 0, 0};
  }
  return {0, 0, 0};
}

Image render(const RasterJob& job) {
  Image img;
  if (!job.supersample) {
    img = render_plain(job);
  } else {
    RasterJob fine = job;
    fine.width *= 2;
    fine.height *= 2;
    fine.supersample = false;
    fine.overlays.clear();
    const Image big = render_plain(fine);
    img.width = job.width;
    img.height = job.height;
    img.labels.resize(std::size_t(job.width) * job.height);
    img.rgb.resize(3 * img.labels.size());
    for (int j = 0; j < job.height; ++j)
      for (int i = 0; i < job.width; ++i) {
        const std::size_t p = std::size_t(j) * job.width + i;
        const std::size_t q[4] = {std::size_t(2 * j) * big.width + 2 * i,
                                  std::size_t(2 * j) * big.width + 2 * i + 1,
                                  std::size_t(2 * j + 1) * big.width + 2 * i,
                                  std::size_t(2 * j + 1) * big.width + 2 * i + 1};
        RegionLabel l = big.labels[q[0]];
        for (std::size_t k : q) {
          const RegionLabel& m = big.labels[k];
          if (rank(m) < rank(l) || (rank(m) == rank(l) && m.n < l.n)) l = m;
        }
        img.labels[p] = l;
        for (int c = 0; c < 3; ++c) {
          int s = 0;
          for (std::size_t k : q) s += big.rgb[3 * k + c];
          img.rgb[3 * p + c] = std::uint8_t((s + 2) / 4);
        }
      }
  }
  for (const auto& ov : job.overlays) stroke(img, job.window, ov);
  return img;
}

std::string to_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

void write_ppm(const Image& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  os << to_ppm(img);
}

std::string labels_to_csv(const RasterJob& job, const Image& img) {
  std::ostringstream os;
  os.precision(17);
  os << "re,im,label,depth_or_iters\n";
  for (int j = 0; j < img.height; ++j)
    for (int i = 0; i < img.width; ++i) {
      const cplx z = pixel_centre(job.window, img.width, img.height, i, j);
      const RegionLabel& l = img.labels[std::size_t(j) * img.width + i];
      os << z.real() << ',' << z.imag() << ',' << region_kind_name(l.kind) << ',' << l.n << '\n';
    }
  return os.str();
}

namespace {

Polyline ray_points(const RayTrace& r) {
  Polyline out;
  for (const auto& s : r.samples) out.push_back(s.point);
  if (r.landing.kind == Landing::Kind::Landed) out.push_back(r.landing.point);
  return out;
}

Window around(cplx c, double half) {
  return {c.real() - half, c.real() + half, c.imag() - half, c.imag() + half};
}

// Landing parameter of the ray 1/3 in S, replaced by the nearby root of
// f^2(c-) = 0.
cplx misiurewicz_one_third() {
  const RayTrace r = trace_parameter_ray(Quadrant::S, RationalAngle(1, 3), 1e-100);
  const cplx land = r.landing.point;
  double best = 1e300;
  cplx out = land;
  for (cplx m : solve_misiurewicz_parabolic(1, around(land, 0.2)))
    if (std::abs(m - land) < best) {
      best = std::abs(m - land);
      out = m;
    }
  return out;
}

constexpr cplx kPeriodTwoCentre(2.2075387674, 0.5926395119);

}  // namespace

std::vector<std::string> figure_preset_names() {
  return {"butterfly", "external-rays", "main-component", "capture-zoom",
          "mandel-copy", "misiurewicz-julia", "renorm-julia"};
}

RasterJob figure_preset(const std::string& name) {
  RasterJob job;
  if (name == "butterfly") return job;
  if (name == "external-rays") {
    job.window = {-3.2, 3.2, -3.2, 3.2};
    Overlay ov{"parameter rays 0, 1/2", {}, {255, 200, 0}};
    for (Quadrant q : {Quadrant::S, Quadrant::iS, Quadrant::mS, Quadrant::miS})
      for (const RationalAngle& t : {RationalAngle(0, 1), RationalAngle(1, 2)})
        ov.curves.push_back(ray_points(trace_parameter_ray(q, t, 1e-8)));
    job.overlays.push_back(std::move(ov));
    return job;
  }
  if (name == "main-component") {
    job.window = {-0.3, 2.5, -1.4, 1.4};
    Overlay e0{"E(0)", {}, {255, 255, 255}}, e1{"E(1)", {}, {255, 160, 0}};
    for (const auto& c : parameter_e0_u0()) {
      e0.curves.push_back(c.points);
      Polyline m(c.points.size());
      std::transform(c.points.begin(), c.points.end(), m.begin(), [](cplx z) { return std::conj(z); });
      e0.curves.push_back(std::move(m));
    }
    for (const auto& c : parameter_equipotential_u0(1)) {
      e1.curves.push_back(c.points);
      Polyline m(c.points.size());
      std::transform(c.points.begin(), c.points.end(), m.begin(), [](cplx z) { return std::conj(z); });
      e1.curves.push_back(std::move(m));
    }
    job.overlays = {std::move(e0), std::move(e1)};
    return job;
  }
  if (name == "capture-zoom") {
    const auto centres = solve_critical_relation(OrbitTarget::CPlus, 1, {0.0, 0.6, 1.5, 2.3});
    if (centres.empty()) fail(ErrorCode::MissingComponentData, "no capture centre of depth 1");
    cplx c = centres.front();
    for (cplx z : centres)
      if (z.real() < c.real()) c = z;
    job.window = around(c, 0.3);
    Overlay ov{"E(0) of the capture component", {capture_equipotential(c, 1).points}, {255, 255, 255}};
    job.overlays.push_back(std::move(ov));
    return job;
  }
  if (name == "mandel-copy") {
    job.window = around(kPeriodTwoCentre, 0.35);
    Overlay ov{"parameter rays of depth 2 landing in the window", {}, {255, 200, 0}};
    for (const auto& t : para_graph_angles(2)) {
      const Quadrant q = t.value() <= 0.75 ? Quadrant::S : Quadrant::iS;
      try {
        const RayTrace r = trace_parameter_ray(q, t, 1e-30);
        if (job.window.contains(r.landing.point)) ov.curves.push_back(ray_points(r));
      } catch (const DomainError&) {
      }
    }
    job.overlays.push_back(std::move(ov));
    return job;
  }
  if (name == "misiurewicz-julia" || name == "renorm-julia") {
    job.mode = RasterMode::Dynamical;
    job.a = name == "renorm-julia" ? kPeriodTwoCentre : misiurewicz_one_third();
    job.window = around(-job.a / 3.0, 2.2);
    Overlay ov{"dynamical rays 0, 1/3, 2/3", {}, {255, 200, 0}};
    for (const RationalAngle& t : {RationalAngle(0, 1), RationalAngle(1, 3), RationalAngle(2, 3)}) {
      try {
        ov.curves.push_back(ray_points(trace_dynamical_ray(job.a, t, 1e-12)));
      } catch (const DomainError&) {
      }
    }
    job.overlays.push_back(std::move(ov));
    return job;
  }
  fail(ErrorCode::InvalidArgument, "unknown figure preset: " + name);
}

}  // namespace per1
