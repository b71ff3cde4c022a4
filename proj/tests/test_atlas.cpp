#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "per1/atlas.hpp"
#include "per1/puzzle.hpp"

using namespace per1;
using K = RegionLabel::Kind;

namespace {

RasterJob small_butterfly() {
  RasterJob job = figure_preset("butterfly");
  job.width = job.height = 160;
  return job;
}

const Image& small_image() {
  static const Image img = render(small_butterfly());
  return img;
}

}  // namespace

TEST_CASE("single pixels") {
  CHECK(classify_pixel(RasterMode::Parameter, 1.0).kind == K::Adjacent);
  CHECK(classify_pixel(RasterMode::Parameter, -1.0).kind == K::Adjacent);
  CHECK(classify_pixel(RasterMode::Parameter, 4.0).kind == K::Escape);
  // c- = -i is a superattracting fixed point
  CHECK(classify_pixel(RasterMode::Parameter, cplx(0, 1)).kind == K::Undetermined);
  const auto z0 = classify_pixel(RasterMode::Dynamical, 0.0, {}, 1.0);
  CHECK((z0.kind == K::Petal || z0.kind == K::Basin));
  CHECK(classify_pixel(RasterMode::Dynamical, -0.01, {}, 1.0).kind == K::Petal);
  CHECK(classify_pixel(RasterMode::Dynamical, -0.5, {}, 1.0).kind == K::Petal);
  // the other preimages of f(-1/2) lie off the petal
  const cplx off(-0.25, std::sqrt(2.75) / 2);
  CHECK(std::abs(f(1.0, off) - f(1.0, -0.5)) < 1e-14);
  CHECK(classify_pixel(RasterMode::Dynamical, off, {}, 1.0).kind == K::Basin);
  CHECK(classify_pixel(RasterMode::Dynamical, 5.0, {}, 1.0).kind == K::Escape);
}

TEST_CASE("pixel centres of symmetric windows mirror exactly") {
  const Window w{-2.6, 2.6, -1.3, 1.3};
  for (int i = 0; i < 37; ++i)
    for (int j = 0; j < 9; ++j) {
      const cplx p = pixel_centre(w, 37, 9, i, j), q = pixel_centre(w, 37, 9, 36 - i, 8 - j);
      CHECK(p == -q);
    }
  CHECK(pixel_centre(w, 37, 9, 18, 4) == cplx(0, 0));
}

TEST_CASE("symmetries of the parameter raster") {
  const Image& img = small_image();
  const int n = img.width;
  bool mirror = true, point = true;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      mirror &= img.at(i, j) == img.at(i, n - 1 - j);
      point &= img.at(i, j) == img.at(n - 1 - i, n - 1 - j);
    }
  CHECK(mirror);
  CHECK(point);
}

TEST_CASE("render agrees with per-pixel classification away from boundaries") {
  const RasterJob job = small_butterfly();
  const Image& img = small_image();
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> u(2, job.width - 3);
  int tested = 0, agree = 0;
  while (tested < 150) {
    const int i = u(rng), j = u(rng);
    const RegionLabel l = img.labels[std::size_t(j) * job.width + i];
    if (l.kind != K::Adjacent && l.kind != K::Capture) continue;
    bool interior = true;
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj)
        interior &= img.labels[std::size_t(j + dj) * job.width + i + di] == l;
    if (!interior) continue;
    ++tested;
    agree += classify_pixel(RasterMode::Parameter, pixel_centre(job.window, job.width, job.height, i, j),
                            job.budgets) == l;
  }
  CHECK(agree == tested);
  int captures = 0;
  for (const auto& l : img.labels) captures += l.kind == K::Capture;
  CHECK(captures > 0);
}

TEST_CASE("real axis") {
  RasterJob job;
  job.window = {-3, 3, -0.01, 0.01};
  job.width = 1201;
  job.height = 1;
  const Image img = render(job);
  for (int i = 0; i < job.width; ++i) {
    const double x = pixel_centre(job.window, job.width, 1, i, 0).real();
    CHECK(pixel_centre(job.window, job.width, 1, i, 0).imag() == 0.0);
    const auto& l = img.labels[i];
    if (std::abs(x) > 1e-9 && std::abs(x) <= kSqrt3) CHECK(l.kind == K::Adjacent);
    if (std::abs(x) > 2.0) CHECK(l.kind == K::Escape);
  }
}

TEST_CASE("determinism and budgets") {
  RasterJob job = small_butterfly();
  job.width = job.height = 96;
  const Image a = render(job);
  job.threads = 3;
  const Image b = render(job);
  CHECK(a.rgb == b.rgb);
  CHECK(a.labels == b.labels);

  RasterJob lo = job, hi = job;
  lo.budgets.escape_iter = lo.budgets.basin_iter = 40;
  hi.budgets.escape_iter = hi.budgets.basin_iter = 4000;
  const Image il = render(lo), ih = render(hi);
  for (std::size_t p = 0; p < il.labels.size(); ++p)
    if (il.labels[p].kind == K::Escape) CHECK(ih.labels[p] == il.labels[p]);
}

TEST_CASE("output formats") {
  RasterJob job;
  job.width = 7;
  job.height = 5;
  job.window = {-3, 3, -2, 2};
  const Image img = render(job);
  const std::string ppm = to_ppm(img);
  CHECK(ppm.rfind("P6\n7 5\n255\n", 0) == 0);
  CHECK(ppm.size() == std::string("P6\n7 5\n255\n").size() + 3 * 35);
  const std::string csv = labels_to_csv(job, img);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "re,im,label,depth_or_iters");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 35);

  job.supersample = true;
  const Image ss = render(job);
  CHECK(ss.width == 7);
  CHECK(ss.rgb.size() == 3 * 35);
}

TEST_CASE("overlays are stroked last") {
  RasterJob job;
  job.width = job.height = 64;
  job.window = {-3, 3, -3, 3};
  job.overlays.push_back({"diagonal", {{cplx(-3, -3), cplx(3, 3)}}, {255, 0, 255}});
  const Image img = render(job);
  int hits = 0;
  for (int i = 0; i < 64; ++i) hits += img.at(i, 63 - i) == Rgb{255, 0, 255};
  CHECK(hits == 64);
}

TEST_CASE("dynamical raster") {
  RasterJob job;
  job.mode = RasterMode::Dynamical;
  job.a = 1.0;
  job.window = {-1.5, 0.5, -1, 1};
  job.width = job.height = 64;
  const Image img = render(job);
  int basin = 0, petal = 0, esc = 0;
  for (const auto& l : img.labels) {
    basin += l.kind == K::Basin;
    petal += l.kind == K::Petal;
    esc += l.kind == K::Escape;
  }
  CHECK(basin > 0);
  CHECK(petal > 0);
  CHECK(esc > 0);
  // f_{conj a} is conjugate to f_a by z -> conj z
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) CHECK(img.labels[j * 64 + i] == img.labels[(63 - j) * 64 + i]);
}

TEST_CASE("presets") {
  const RasterJob b = figure_preset("butterfly");
  CHECK(b.window.re_min <= -2.5);
  CHECK(b.window.re_max >= 2.5);
  CHECK(b.window.im_min <= -2.5);
  CHECK(b.window.im_max >= 2.5);
  CHECK(b.mode == RasterMode::Parameter);
  const RasterJob r = figure_preset("external-rays");
  REQUIRE(r.overlays.size() == 1);
  CHECK(r.overlays[0].curves.size() == 8);
  CHECK(figure_preset_names().size() == 7);
  CHECK_THROWS_AS(figure_preset("nope"), DomainError);
}

TEST_CASE("wake test") {
  CHECK(wake_test(cplx(0, 2)));
  CHECK(wake_test(cplx(0.2, 2)));
  CHECK_FALSE(wake_test(1.0));
  CHECK_FALSE(wake_test(-1.0));
  CHECK_THROWS_AS(wake_test(0.0), DomainError);
}
