#include "per1/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "per1/atlas.hpp"
#include "per1/boettcher.hpp"
#include "per1/fatou.hpp"
#include "per1/model.hpp"
#include "per1/puzzle.hpp"

namespace per1 {

namespace {

class Check {
 public:
  Check(std::string id, double limit) : start_(std::chrono::steady_clock::now()) {
    r_.id = std::move(id);
    r_.time_limit = limit;
  }
  void below(const std::string& name, double measured, double tol) {
    add(name, measured, tol, measured < tol, measured / tol, " < ");
  }
  void above(const std::string& name, double measured, double floor) {
    add(name, measured, floor, measured > floor, measured > 0 ? floor / measured : kInf, " > ");
  }
  void require(const std::string& name, bool ok, double measured = 0) {
    add(name, measured, 0, ok, ok ? 0 : kInf, "=");
  }
  void error(const std::string& what) { require("exception: " + what, false); }
  CheckResult finish() {
    r_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ostringstream os;
    os.precision(3);
    os << "time: " << r_.seconds << "s < " << r_.time_limit << "s";
    if (r_.seconds >= r_.time_limit) ok_ = false;
    r_.pass = ok_ && parts_ > 0;
    r_.detail = detail_ + (detail_.empty() ? "" : "; ") + os.str();
    return r_;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  void add(const std::string& name, double measured, double tol, bool ok, double score, const char* rel) {
    ++parts_;
    ok_ = ok_ && ok;
    if (!(score <= worst_)) {
      worst_ = score;
      r_.measured = measured;
      r_.tolerance = tol;
    }
    std::ostringstream os;
    os.precision(3);
    os << name;
    if (tol != 0)
      os << ": " << measured << rel << tol;
    else if (measured != 0)
      os << rel << measured;
    if (!ok) os << " (FAIL)";
    detail_ += (detail_.empty() ? "" : "; ") + os.str();
  }
  std::chrono::steady_clock::time_point start_;
  CheckResult r_;
  bool ok_ = true;
  int parts_ = 0;
  double worst_ = -1;
  std::string detail_;
};

CheckResult guarded(const std::string& id, double limit, const std::function<void(Check&)>& body) {
  Check c(id, limit);
  try {
    body(c);
  } catch (const DomainError& e) {
    c.error(std::string(e.name()) + ": " + e.what());
  } catch (const std::exception& e) {
    c.error(e.what());
  }
  return c.finish();
}

cplx root_of(cplx a, cplx z, int n) {
  for (int k = 0; k < n; ++k) z = f(a, z);
  return z;
}

CheckResult critical_algebra() {
  return guarded("critical-algebra", 5, [](Check& c) {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(-10, 10);
    double dres = 0, vieta = 0;
    for (int i = 0; i < 10000; ++i) {
      const cplx a(u(rng), u(rng));
      const auto p = critical_points(a);
      const double scale = std::max(1.0, std::norm(a));
      dres = std::max({dres, std::abs(df(a, p.plus)) / scale, std::abs(df(a, p.minus)) / scale});
      const double s = std::abs(p.plus + p.minus + 2.0 * a / 3.0) / std::max(1.0, std::abs(a));
      const double q = std::abs(p.plus * p.minus - 1.0 / 3.0) / std::max(1.0, std::abs(a));
      vieta = std::max({vieta, s, q});
    }
    c.below("f'(c)", dres, 1e-11);
    c.below("vieta", vieta, 1e-12);
    const int n = 10000;
    auto prev = critical_points(2.0);
    double jump = 0;
    for (int k = 1; k <= n; ++k) {
      const auto cur = critical_points(std::polar(2.0, kTwoPi * k / n));
      jump = std::max({jump, std::abs(cur.plus - prev.plus), std::abs(cur.minus - prev.minus)});
      prev = cur;
    }
    c.below("branch-walk |a|=2 max step", jump, 1e-2);
  });
}

CheckResult asymptotics() {
  return guarded("asymptotics", 10, [](Check& c) {
    for (double r : {1e2, 1e3}) {
      double dv = 0, dp = 0;
      for (int k = 0; k < 8; ++k) {
        const cplx a = std::polar(r, kTwoPi * (k + 0.25) / 8);
        dv = std::max(dv, std::abs(27.0 * critical_values(a).minus / (4.0 * a * a * a) - 1.0));
        dp = std::max(dp, std::abs(phi_infty(a) / (4.0 * a * a * a / 27.0) - 1.0));
      }
      const std::string tag = r == 1e2 ? "|a|=1e2" : "|a|=1e3";
      c.below("v- " + tag, dv, 1e-3);
      c.below("phi_infty " + tag, dp, r == 1e2 ? 1e-2 : 1e-3);
    }
    const int n = 720;
    double total = 0;
    cplx prev = phi_infty(50.0);
    for (int k = 1; k <= n; ++k) {
      const cplx cur = phi_infty(std::polar(50.0, kTwoPi * k / n));
      total += std::arg(cur / prev);
      prev = cur;
    }
    const double w = total / kTwoPi;
    c.require("winding on |a|=50 is 3", std::lround(w) == 3 && std::abs(w - 3) < 1e-6, w);
  });
}

CheckResult boettcher_green() {
  return guarded("boettcher-green", 5, [](Check& c) {
    constexpr double tol = 1e-13;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> r(3, 60), th(0, kTwoPi);
    double fe = 0, ge = 0;
    for (cplx a : {cplx(1, 0), cplx(2, 1), cplx(0, 3)}) {
      int taken = 0;
      while (taken < 100) {
        const cplx z = std::polar(r(rng), th(rng));
        if (!escape_classify(a, z, 50).escaped) continue;
        ++taken;
        const cplx p = boettcher(a, z), q = boettcher(a, f(a, z));
        fe = std::max(fe, std::abs(q / (p * p * p) - 1.0));
        const double g0 = green_function(a, z, tol), g1 = green_function(a, f(a, z), tol);
        ge = std::max(ge, std::abs(g1 - 3 * g0) / std::max(1.0, g1));
      }
    }
    c.below("phi(f z)/phi(z)^3 - 1", fe, 1e-9);
    c.below("g(f z) - 3 g(z)", ge, 3 * tol);
  });
}

CheckResult fatou_machinery() {
  return guarded("fatou", 20, [](Check& c) {
    double abel = 0, trip = 0, norm = 0;
    for (cplx a : {cplx(1, 0), cplx(0.8, 0.4)}) {
      const FatouCoordinate fc(a);
      std::mt19937_64 rng(3);
      std::uniform_real_distribution<double> u(-2, 2);
      int taken = 0;
      while (taken < 1000) {
        const cplx z(u(rng), u(rng));
        const auto p = fc.try_eval(z);
        if (!p) continue;
        const auto q = fc.try_eval(f(a, z));
        if (!q) {
          abel = std::numeric_limits<double>::infinity();
          break;
        }
        ++taken;
        abel = std::max(abel, std::abs(*q - *p - 1.0));
      }
      std::uniform_real_distribution<double> re(0.05, 5), im(-5, 5);
      for (int i = 0; i < 100; ++i) {
        const cplx W(re(rng), im(rng));
        trip = std::max(trip, std::abs(fc(fc.petal_inverse(W)) - W));
      }
      norm = std::max(norm, std::abs(fc(critical_values(a).plus) - 1.0));
    }
    c.below("abel", abel, 1e-8);
    c.below("petal round trip", trip, 1e-7);
    c.below("fatou(v+) - 1", norm, 1e-6);
  });
}

CheckResult parameter_landings() {
  return guarded("parameter-ray-landings", 60, [](Check& c) {
    const auto r0 = trace_parameter_ray(Quadrant::S, RationalAngle(0, 1), 1e-100);
    c.below("R_S(0) to 2", std::abs(r0.landing.point - 2.0), 1e-3);
    const auto r2 = trace_parameter_ray(Quadrant::S, RationalAngle(1, 2), 1e-300);
    c.below("R_S(1/2) to 0", std::abs(r2.landing.point), 5e-2);
    const auto r3 = trace_parameter_ray(Quadrant::S, RationalAngle(1, 3), 1e-100);
    double best = 1e300;
    for (cplx m : solve_misiurewicz_parabolic(1, Window{-3, 3, -3, 3}))
      best = std::min(best, std::abs(m - r3.landing.point));
    c.below("R_S(1/3) to a depth-1 root", best, 1e-3);
  });
}

CheckResult misiurewicz() {
  return guarded("misiurewicz-solver", 10, [](Check& c) {
    const auto d0 = solve_misiurewicz_parabolic(0, Window{-3, 3, -3, 3});
    double off = d0.size() == 2 ? 0 : 1e300;
    if (d0.size() == 2)
      off = std::max(std::min(std::abs(d0[0] - 2.0), std::abs(d0[0] + 2.0)),
                     std::min(std::abs(d0[1] - 2.0), std::abs(d0[1] + 2.0)));
    c.require("depth 0 has two roots", d0.size() == 2, double(d0.size()));
    c.require("depth 0 is {2, -2}", d0.size() == 2 && std::abs(std::abs(d0[0] - d0[1]) - 4) < 1e-12 && off < 1e-12,
              off);
    const auto d1 = solve_misiurewicz_parabolic(1, Window{-3, 3, -3, 3});
    c.require("depth 1 roots exist", !d1.empty(), double(d1.size()));
    double res = 0, low = 1e300;
    for (cplx a : d1) {
      const cplx cm = critical_points(a).minus;
      res = std::max(res, std::abs(root_of(a, cm, 2)));
      low = std::min(low, std::abs(root_of(a, cm, 1)));
    }
    c.below("|f^2(c-)|", res, 1e-10);
    c.above("depth 1 min |f(c-)|", low, 1e-4);
  });
}

CheckResult model_ray() {
  return guarded("model-internal-ray-1/3", 10, [](Check& c) {
    const auto ray = model_internal_ray(InternalAngle::parse("1/3"), 8);
    auto P = [](cplx z) { return z * z + 0.25; };
    double inv = 0;
    for (std::size_t n = 1; n < ray.links.size(); ++n) {
      if (ray.links[n].size() != ray.links[n - 1].size()) {
        c.require("link sizes", false);
        return;
      }
      for (std::size_t j = 0; j < ray.links[n].size(); ++j)
        inv = std::max(inv, std::abs(P(P(ray.links[n][j])) - ray.links[n - 1][j]));
    }
    c.below("P^2(link n) - link n-1", inv, 1e-6);
    // period-2 points of z^2 + 1/4: roots of z^2 + z + 5/4
    const cplx d = std::sqrt(cplx(1.0 - 5.0, 0));
    const cplx p1 = (-1.0 + d) / 2.0, p2 = (-1.0 - d) / 2.0;
    c.below("tail to (-1 +- 2i)/2", std::min(std::abs(ray.tail - p1), std::abs(ray.tail - p2)), 1e-3);
  });
}

CheckResult parametrization() {
  return guarded("phi-parametrization", 30, [](Check& c) {
    c.below("Phi(sqrt3) - 1/4", std::abs(phi_adjacent(kSqrt3) - 0.25), 1e-6);
    double im = 0, re = 1e300;
    for (double a : {1.74, 1.78, 1.82, 1.86, 1.9, 1.94, 1.98}) {
      const cplx p = phi_adjacent(a);
      im = std::max(im, std::abs(p.imag()));
      re = std::min(re, model_fatou(p).real());
    }
    c.below("|Im Phi| on (sqrt3, 2)", im, 1e-8);
    c.above("Re model_fatou(Phi) on (sqrt3, 2)", re, 1.0);
    // v- = c+ with c = c-: f(c) = c(1 - c^2)/2 and c+ = 1/(3c) give
    // 3c^4 - 3c^2 + 2 = 0, then a = -(3c^2 + 1)/(2c)
    const cplx disc = std::sqrt(cplx(9.0 - 24.0, 0));
    std::vector<cplx> s0;
    for (cplx c2 : {(3.0 + disc) / 6.0, (3.0 - disc) / 6.0})
      for (cplx cm : {std::sqrt(c2), -std::sqrt(c2)}) {
        const cplx a = -(3.0 * cm * cm + 1.0) / (2.0 * cm);
        if (std::abs(critical_points(a).minus - cm) < 1e-9 && in_quadrant(Quadrant::S, a)) s0.push_back(a);
      }
    c.require("one s0 in S", s0.size() == 1, double(s0.size()));
    if (s0.size() == 1) c.below("Phi(s0)", std::abs(phi_adjacent(s0[0])), 1e-6);
  });
}

CheckResult wake_dichotomy() {
  return guarded("wake-dichotomy", 30, [](Check& c) {
    c.require("wake(2i)", wake_test(cplx(0, 2)));
    c.require("wake(0.2+2i)", wake_test(cplx(0.2, 2)));
    c.require("!wake(1)", !wake_test(1.0));
    c.require("!wake(-1)", !wake_test(-1.0));
    auto land = [](cplx a, RationalAngle t) {
      return std::abs(trace_dynamical_ray(a, t, 1e-100).landing.point);
    };
    const RationalAngle zero(0, 1), half(1, 2);
    const double p0 = land(1.0, zero), p1 = land(1.0, half), m0 = land(-1.0, zero), m1 = land(-1.0, half);
    c.below("a=1: R(0) at 0", p0, 5e-3);
    c.above("a=1: R(1/2) away from 0", p1, 5e-3);
    c.below("a=-1: R(1/2) at 0", m1, 5e-3);
    c.above("a=-1: R(0) away from 0", m0, 5e-3);
  });
}

CheckResult puzzle_sanity() {
  return guarded("puzzle-sanity", 120, [](Check& c) {
    // centre of a period-2 copy on the boundary of U0 outside W(0), and a = i in W(0)
    const std::pair<cplx, bool> classes[] = {{cplx(2.2075387674, 0.5926395119), false}, {cplx(0, 1), true}};
    for (const auto& [a, wake] : classes) {
      const std::string tag = wake ? "wake" : "no-wake";
      c.require(tag + " wake_test", wake_test(a) == wake);
      const auto tower = graph_tower_Y(a, 4, wake);
      c.require(tag + " depth 0..4 graphs", tower.size() == 5, double(tower.size()));
      const auto grid = default_grid(a, tower[0].log_r, 512);
      std::vector<PuzzleMap> maps;
      for (const auto& g : tower) maps.emplace_back(g, grid);
      double worst = 1;
      for (std::size_t m = 1; m < maps.size(); ++m)
        worst = std::min(worst, containment_fraction(maps[m], maps[m - 1]));
      c.require(tag + " containment 100%", worst == 1.0, worst);
      // zero-preimages: 0 from depth 1, and the other roots of f = 0 from depth 2
      std::vector<std::pair<cplx, int>> xs{{0.0, 1}};
      const auto pre = cubic_preimages(a, 0.0);
      for (cplx x : pre)
        if (std::abs(x) > 1e-9) xs.push_back({x, 2});
      int decreasing = 0, total = 0;
      for (const auto& [x, from] : xs) {
        double lp = 1e300, lm = 1e300;
        bool ok = true;
        for (int m = from; m <= 4; ++m) {
          const auto q = adjacent_pieces_at_zero_preimage(maps[m], x);
          if (q.plus < 0 || q.minus < 0 || q.plus == q.minus) {
            ok = false;
            break;
          }
          const double dp = maps[m].pieces()[q.plus].diameter, dm = maps[m].pieces()[q.minus].diameter;
          ok = ok && dp < lp && dm < lm;
          lp = dp;
          lm = dm;
        }
        decreasing += ok;
        ++total;
      }
      c.require(tag + " adjacent diameters decrease", decreasing == total, double(decreasing));
    }
  });
}

CheckResult rendering(int threads) {
  return guarded("render", 120, [threads](Check& c) {
    RasterJob job = figure_preset("butterfly");
    job.threads = threads;
    const bool window_ok = job.width == 512 && job.height == 512 && job.window.re_min <= -2.5 &&
                           job.window.re_max >= 2.5 && job.window.im_min <= -2.5 && job.window.im_max >= 2.5;
    c.require("512x512 window over [-2.5,2.5]^2", window_ok);
    const std::string first = to_ppm(render(job)), second = to_ppm(render(job));
    c.require("bit-identical reruns", first == second);
    const Image img = render(job);
    long mirror = 0, point = 0;
    const int W = img.width, H = img.height;
    for (int j = 0; j < H; ++j)
      for (int i = 0; i < W; ++i) {
        mirror += !(img.at(i, j) == img.at(i, H - 1 - j));
        point += !(img.at(i, j) == img.at(W - 1 - i, H - 1 - j));
      }
    c.require("conjugation symmetry", mirror == 0, double(mirror));
    c.require("negation symmetry", point == 0, double(point));

    RasterJob slice;
    slice.window = {-3, 3, -0.01, 0.01};
    slice.width = 1201;
    slice.height = 1;
    slice.threads = threads;
    const Image s = render(slice);
    long bad_adjacent = 0, bad_escape = 0;
    for (int i = 0; i < slice.width; ++i) {
      const cplx z = pixel_centre(slice.window, slice.width, 1, i, 0);
      if (z.imag() != 0.0) ++bad_adjacent;
      const auto k = s.labels[i].kind;
      if (z.real() > 0 && z.real() <= kSqrt3 && k != RegionLabel::Kind::Adjacent) ++bad_adjacent;
      if (z.real() > 2 && k != RegionLabel::Kind::Escape) ++bad_escape;
    }
    c.require("(0, sqrt3] Adjacent", bad_adjacent == 0, double(bad_adjacent));
    c.require("(2, 3] Escape", bad_escape == 0, double(bad_escape));
  });
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"core", "boettcher", "fatou", "model", "puzzle", "atlas", "all"};
}

std::vector<CheckResult> run_suite(const std::string& suite, int threads) {
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  bool known = all;
  auto want = [&](const char* s) {
    if (suite == s) known = true;
    return all || suite == s;
  };
  if (want("core")) {
    out.push_back(critical_algebra());
    out.push_back(asymptotics());
  }
  if (want("boettcher")) out.push_back(boettcher_green());
  if (want("fatou")) out.push_back(fatou_machinery());
  if (want("boettcher")) out.push_back(parameter_landings());
  if (want("core")) out.push_back(misiurewicz());
  if (want("model")) {
    out.push_back(model_ray());
    out.push_back(parametrization());
  }
  if (want("puzzle")) {
    out.push_back(wake_dichotomy());
    out.push_back(puzzle_sanity());
  }
  if (want("atlas")) out.push_back(rendering(threads));
  if (!known) fail(ErrorCode::InvalidArgument, "unknown suite: " + suite);
  return out;
}

std::string report_text(const std::vector<CheckResult>& results) {
  std::ostringstream os;
  os.precision(3);
  for (const auto& r : results)
    os << (r.pass ? "PASS " : "FAIL ") << r.id << "  measured=" << r.measured << " tolerance=" << r.tolerance
       << "  [" << r.detail << "]\n";
  return os.str();
}

std::string report_json(const std::vector<CheckResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results)
    arr.push_back({{"check_id", r.id},
                   {"status", r.pass ? "PASS" : "FAIL"},
                   {"measured", r.measured},
                   {"tolerance", r.tolerance},
                   {"seconds", r.seconds},
                   {"time_limit", r.time_limit},
                   {"detail", r.detail}});
  return arr.dump(2) + "\n";
}

}  // namespace per1
