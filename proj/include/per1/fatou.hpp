#pragma once

#include <optional>
#include <string>
#include <vector>

#include "per1/core.hpp"

namespace per1 {

struct FatouPolicy {
  double sector_w0 = 20.0;   // orbits are followed until Re w exceeds this
  int max_iter = 100000;
  int series_terms = 24;
  double escape_floor = 1e3;
};

// Attracting Fatou coordinate at a parabolic fixed point with one petal,
// written for maps u -> u (1 + alpha u + gamma u^2) in a local coordinate
// u = z - z0. In w = -1/(alpha u) the map is w -> w / (1 - 1/w + beta/w^2),
// beta = gamma/alpha^2, and the coordinate has the asymptotic expansion
// w - A Log w + sum b_k w^-k with A = 1 - beta.
class FatouCoordinate {
 public:
  // f_a near 0, normalised so that fatou(c+) = 0.
  explicit FatouCoordinate(cplx a, const FatouPolicy& policy = {});
  // P(z) = z^2 + 1/4 near 1/2, normalised so that fatou(0) = 0.
  static FatouCoordinate model(const FatouPolicy& policy = {});

  cplx a() const { return alpha_; }
  cplx drift() const { return A_; }
  cplx sigma() const { return sigma_; }
  bool is_model() const { return model_; }
  const FatouPolicy& policy() const { return policy_; }

  cplx map(cplx z) const;
  cplx map_derivative(cplx z) const;

  // Extended coordinate: lim (Phi(w_N) - N) - sigma. Throws NotInBasin.
  cplx operator()(cplx z) const { return eval(z, nullptr); }
  cplx eval(cplx z, cplx* derivative, int* iterations = nullptr) const;
  // Same with no exception, for classification loops.
  std::optional<cplx> try_eval(cplx z, cplx* derivative = nullptr) const;

  // z on the maximal petal with fatou(z) = W (Re W > 0), or the continuation
  // of the inverse along the horizontal path from W + k back to W.
  cplx petal_inverse(cplx W) const;
  // Continue a solution of fatou(z) = W along the straight path W0 -> W1,
  // starting from z0 with fatou(z0) = W0.
  cplx continue_inverse(cplx z0, cplx W0, cplx W1, double max_step = 0.25) const;

  bool in_petal(cplx z, std::string* reason = nullptr) const;
  // Basin test used by rasters: true once the orbit enters the sector.
  // Returns -1 for escape or timeout, else the iterate count.
  int sector_entry(cplx z, int max_iter) const;

  cplx chart(cplx z) const { return -1.0 / (alpha_ * (z - z0_)); }
  cplx unchart(cplx w) const { return z0_ - 1.0 / (alpha_ * w); }
  bool in_sector(cplx w) const;
  double sector_threshold() const { return w_sector_; }

  // Phi_raw(w) = w - A Log w + sum b_k w^-k
  cplx asymptotic(cplx w, cplx* derivative = nullptr) const;

 private:
  FatouCoordinate(cplx z0, cplx alpha, cplx gamma, bool model, const FatouPolicy& policy);
  cplx raw(cplx z, cplx* derivative, int* iterations) const;
  cplx invert_asymptotic(cplx R) const;

  cplx z0_, alpha_, gamma_;
  bool model_;
  FatouPolicy policy_;
  cplx A_, sigma_;
  double w_sector_ = 20;
  double escape_r2_ = 1e6;
  std::vector<cplx> b_;
};

// Fatou coordinate normalised for f_a; a convenience for one-off calls.
cplx attracting_fatou(cplx a, cplx z);

struct CaptureVerdict {
  enum class Kind { Adjacent, Capture, Escape, Undetermined };
  Kind kind = Kind::Undetermined;
  int n = 0;                // depth for Capture
  double resolution = 0;    // pixel size of the deciding raster
};
const char* capture_kind_name(CaptureVerdict::Kind k);

struct CapturePolicy {
  std::vector<int> ladder{128, 256, 512};  // pixels per side
  int escape_iter = 1000;
  int basin_iter = 1000;
  double sector_w0 = 20.0;
};

// Immediate-basin membership on a raster over the disk |z| < max(2, |a|+1):
// a point belongs to B* when its pixel connects, through pixels whose centres
// lie in the basin, to a pixel holding the forward orbit of v+.
class BasinRaster {
 public:
  BasinRaster(const FatouCoordinate& fc, int n, int basin_iter);
  // 1 in B*, 0 not in B*, -1 undecided (outside the raster or no basin pixel)
  int in_immediate_basin(cplx z);
  double pixel() const { return h_; }

 private:
  int index_of(double x) const;
  cplx centre(int i, int j) const;
  bool basin_pixel(int i, int j);

  const FatouCoordinate& fc_;
  int n_;
  int basin_iter_;
  double rho_, h_;
  std::vector<signed char> basin_;    // -1 unknown, 0 no, 1 yes
  std::vector<signed char> star_;     // -1 unknown, 0 no, 1 yes
};

CaptureVerdict capture_depth(cplx a, int max_depth, const CapturePolicy& policy = {});

struct IInvariant {
  double value;        // Im(fatou(v+) - fatou(v-)) with the larger-Im label first
  double re_diagnostic;
};
IInvariant i_invariant(cplx a);

}  // namespace per1
