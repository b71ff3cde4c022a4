#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "per1/model.hpp"

namespace per1 {

enum class RasterMode { Parameter, Dynamical };

struct RegionLabel {
  enum class Kind { Escape, Adjacent, Capture, Basin, Petal, Undetermined };
  Kind kind = Kind::Undetermined;
  int n = 0;  // escape time, or capture depth
  bool operator==(const RegionLabel& o) const { return kind == o.kind && n == o.n; }
};
const char* region_kind_name(RegionLabel::Kind k);

struct RasterBudgets {
  int escape_iter = 500;
  int basin_iter = 2000;     // to reach the attracting sector; at least 16/|a|^2 for parameters
  int capture_depth = 4;     // deeper captures are Undetermined
  double sector_w0 = 20.0;
  double escape_floor = 1e3;
};

using Rgb = std::array<std::uint8_t, 3>;

struct Overlay {
  std::string name;
  std::vector<Polyline> curves;
  Rgb color{255, 255, 255};
};

struct RasterJob {
  Window window{-2.6, 2.6, -2.6, 2.6};
  int width = 512, height = 512;
  RasterMode mode = RasterMode::Parameter;
  cplx a = 1.0;  // dynamical mode only
  std::vector<Overlay> overlays;
  RasterBudgets budgets;
  bool supersample = false;  // 2x2, colours averaged
  int threads = 1;
};

// Parameter mode: escape of either critical orbit, else the capture depth of
// c-. Dynamical mode: escape, petal sector, or basin of 0.
RegionLabel classify_pixel(RasterMode mode, cplx point, const RasterBudgets& budgets = {},
                           cplx a = 1.0);

// Pixel (i, j) with j = 0 the top row. Centres are placed so that a window
// symmetric about an axis yields exactly mirrored coordinates.
cplx pixel_centre(const Window& w, int width, int height, int i, int j);

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
  std::vector<RegionLabel> labels;
  Rgb at(int i, int j) const;
};

// Parameter mode classifies the escape and basin status pixel by pixel and
// the capture depth once per connected component of basin pixels.
Image render(const RasterJob& job);

Rgb palette_color(const RegionLabel& l);
std::string to_ppm(const Image& img);
void write_ppm(const Image& img, const std::string& path);
// re,im,label,depth_or_iters per pixel, row-major from the top row.
std::string labels_to_csv(const RasterJob& job, const Image& img);

// butterfly, external-rays, main-component, capture-zoom, mandel-copy,
// misiurewicz-julia, renorm-julia
RasterJob figure_preset(const std::string& name);
std::vector<std::string> figure_preset_names();

}  // namespace per1
