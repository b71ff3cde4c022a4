#include "per1/fatou.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace per1 {

namespace {

using Series = std::vector<cplx>;

Series mul(const Series& p, const Series& q, std::size_t n) {
  Series r(n, 0.0);
  for (std::size_t i = 0; i < p.size() && i < n; ++i)
    for (std::size_t j = 0; j < q.size() && i + j < n; ++j) r[i + j] += p[i] * q[j];
  return r;
}

// Coefficients b_1..b_K of Phi(w) = w - A Log w + sum b_k w^-k for
// w -> w / (1 - 1/w + beta/w^2). With x = 1/w, matching powers of x in
// Phi(w') - Phi(w) = 1 gives b_{m-1} from lower ones.
Series asymptotic_coefficients(cplx beta, cplx A, int K) {
  const std::size_t n = K + 3;
  const Series q{1.0, -1.0, beta};  // 1 - x + beta x^2
  // g = 1/q
  Series g(n, 0.0);
  g[0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    g[i] = g[i - 1];
    if (i >= 2) g[i] -= beta * g[i - 2];
  }
  // log g = -log q = sum y^j / j with y = x - beta x^2
  Series y{0.0, 1.0, -beta}, yp{1.0}, lg(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    yp = mul(yp, y, n);
    for (std::size_t i = 0; i < n; ++i) lg[i] += yp[i] / static_cast<double>(j);
  }
  std::vector<Series> P(K + 1);
  P[0] = Series{1.0};
  for (int k = 1; k <= K; ++k) P[k] = mul(P[k - 1], q, n);

  Series b(K + 1, 0.0);
  for (int m = 2; m <= K + 1; ++m) {
    cplx s = g[m + 1] - A * lg[m];
    for (int k = 1; k < m - 1; ++k)
      if (static_cast<std::size_t>(m - k) < P[k].size()) s += b[k] * P[k][m - k];
    b[m - 1] = s / static_cast<double>(m - 1);
  }
  return b;
}

}  // namespace

FatouCoordinate::FatouCoordinate(cplx a, const FatouPolicy& policy)
    : FatouCoordinate(0.0, a, 1.0, false, policy) {}

FatouCoordinate FatouCoordinate::model(const FatouPolicy& policy) {
  return FatouCoordinate(0.5, 1.0, 0.0, true, policy);
}

FatouCoordinate::FatouCoordinate(cplx z0, cplx alpha, cplx gamma, bool model,
                                 const FatouPolicy& policy)
    : z0_(z0), alpha_(alpha), gamma_(gamma), model_(model), policy_(policy) {
  if (std::abs(alpha) < 1e-12) fail(ErrorCode::DegenerateParameter, "a = 0 has two petals");
  const cplx beta = gamma / (alpha * alpha);
  A_ = 1.0 - beta;
  const int K = policy.series_terms;
  b_ = asymptotic_coefficients(beta, A_, K);
  double rad = 0;
  for (int k = 1; k <= K; ++k) rad = std::max(rad, std::pow(std::abs(b_[k]), 1.0 / k));
  // the tail b_K W^-K must sit well below double precision
  const double tail = std::pow(std::abs(b_[K]) / 1e-15, 1.0 / K);
  w_sector_ = std::max({policy.sector_w0, 2 * rad, tail, 4 * std::abs(A_)});
  const double R = model ? policy.escape_floor : escape_radius(alpha, policy.escape_floor);
  escape_r2_ = R * R;

  sigma_ = 0.0;
  if (model)
    sigma_ = raw(0.0, nullptr, nullptr);
  else
    sigma_ = raw(critical_values(alpha).plus, nullptr, nullptr) - 1.0;
}

cplx FatouCoordinate::map(cplx z) const {
  if (model_) return z * z + 0.25;
  return f(alpha_, z);
}

cplx FatouCoordinate::map_derivative(cplx z) const {
  if (model_) return 2.0 * z;
  return df(alpha_, z);
}

bool FatouCoordinate::in_sector(cplx w) const {
  return w.real() > w_sector_ && std::abs(w.imag()) < w.real();
}

cplx FatouCoordinate::asymptotic(cplx w, cplx* derivative) const {
  const cplx x = 1.0 / w;
  cplx s = 0.0, ds = 0.0;
  for (std::size_t k = b_.size() - 1; k >= 1; --k) {
    s = (s + b_[k]) * x;
    ds = ds * x + static_cast<double>(k) * b_[k];
  }
  // ds now holds sum k b_k x^{k-1}
  if (derivative) *derivative = 1.0 - A_ * x - ds * x * x;
  return w - A_ * std::log(w) + s;
}

cplx FatouCoordinate::raw(cplx z, cplx* derivative, int* iterations) const {
  cplx dz = 1.0;
  for (int n = 0; n <= policy_.max_iter; ++n) {
    if (z != z0_) {
      const cplx w = chart(z);
      if (in_sector(w)) {
        if (iterations) *iterations = n;
        if (derivative) {
          cplx dphi;
          asymptotic(w, &dphi);
          const cplx u = z - z0_;
          *derivative = dphi * dz / (alpha_ * u * u);
        }
        return asymptotic(w) - static_cast<double>(n);
      }
    }
    if (std::norm(z) > escape_r2_) fail(ErrorCode::NotInBasin, "orbit escapes");
    if (derivative) dz *= map_derivative(z);
    z = map(z);
  }
  fail(ErrorCode::NotInBasin, "orbit did not reach the attracting sector");
}

cplx FatouCoordinate::eval(cplx z, cplx* derivative, int* iterations) const {
  return raw(z, derivative, iterations) - sigma_;
}

std::optional<cplx> FatouCoordinate::try_eval(cplx z, cplx* derivative) const {
  try {
    return eval(z, derivative);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

int FatouCoordinate::sector_entry(cplx z, int max_iter) const {
  for (int n = 0; n <= max_iter; ++n) {
    if (z != z0_ && in_sector(chart(z))) return n;
    if (std::norm(z) > escape_r2_) return -1;
    z = map(z);
  }
  return -1;
}

cplx FatouCoordinate::invert_asymptotic(cplx R) const {
  cplx w = R + A_ * std::log(R);
  for (int it = 0; it < 50; ++it) {
    cplx d;
    const cplx step = (asymptotic(w, &d) - R) / d;
    w -= step;
    if (std::abs(step) < 1e-15 * std::abs(w)) break;
  }
  return w;
}

cplx FatouCoordinate::continue_inverse(cplx z, cplx W0, cplx W1, double max_step) const {
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(W1 - W0) / max_step)));
  cplx Wprev = W0;
  for (int s = 1; s <= steps; ++s) {
    const cplx W = W0 + (W1 - W0) * (static_cast<double>(s) / steps);
    cplx d;
    auto cur = try_eval(z, &d);
    if (!cur) fail(ErrorCode::InverseBranchLost, "continuation left the basin");
    cplx x = z;
    if (std::abs(d) > 1e-8) x = z + (W - *cur) / d;
    // Newton; damped when the residual grows. Near c+ the root is double and
    // convergence is only linear, hence the generous iteration count.
    double res = 1e300;
    cplx best = x;
    const double floor = 1e-13 * std::max(1.0, std::abs(W));
    for (int it = 0; it < 80; ++it) {
      auto v = try_eval(x, &d);
      if (!v) {
        x = 0.5 * (x + z);
        continue;
      }
      const double r = std::abs(*v - W);
      if (r < res) {
        res = r;
        best = x;
      } else if (r > 1e3 * floor) {
        // back off toward the previous iterate
        x = 0.5 * (x + z);
        continue;
      }
      if (r < floor || std::abs(d) == 0.0) break;
      const cplx dx = (*v - W) / d;
      x -= dx;
      if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    x = best;
    if (res > 1e-8 * std::max(1.0, std::abs(W)))
      fail(ErrorCode::InverseBranchLost, "Newton failed along the inverse path");
    // a jump larger than the predicted displacement signals a sheet change
    if (std::abs(d) > 1e-8 && std::abs(x - z) > 4 * std::abs(W - Wprev) / std::abs(d) + 1e-6)
      fail(ErrorCode::InverseBranchLost, "inverse branch jumped");
    z = x;
    Wprev = W;
  }
  return z;
}

cplx FatouCoordinate::petal_inverse(cplx W) const {
  // translate forward until the asymptotic inverse lands deep in the sector
  const cplx R = W + sigma_;
  double k = std::max(0.0, std::ceil(2 * w_sector_ - R.real()));
  cplx w;
  for (;; k += 8) {
    w = invert_asymptotic(R + k);
    if (w.real() > 1.5 * w_sector_ && std::abs(w.imag()) < 0.5 * w.real()) break;
    if (k > 1e5) fail(ErrorCode::InverseBranchLost, "no sector preimage");
  }
  const cplx zk = unchart(w);
  if (k == 0) return zk;
  return continue_inverse(zk, W + k, W);
}

bool FatouCoordinate::in_petal(cplx z, std::string* reason) const {
  auto set = [reason](const char* r) {
    if (reason) *reason = r;
    return false;
  };
  const auto v = try_eval(z);
  if (!v) return set("not in the parabolic basin");
  if (v->real() <= 0) return set("Re fatou <= 0");
  try {
    const cplx back = petal_inverse(*v);
    if (std::abs(back - z) > 1e-6) return set("on another sheet of the basin");
  } catch (const DomainError&) {
    return set("petal inverse failed");
  }
  if (reason) reason->clear();
  return true;
}

cplx attracting_fatou(cplx a, cplx z) { return FatouCoordinate(a)(z); }

const char* capture_kind_name(CaptureVerdict::Kind k) {
  switch (k) {
    case CaptureVerdict::Kind::Adjacent: return "Adjacent";
    case CaptureVerdict::Kind::Capture: return "Capture";
    case CaptureVerdict::Kind::Escape: return "Escape";
    case CaptureVerdict::Kind::Undetermined: return "Undetermined";
  }
  return "?";
}

BasinRaster::BasinRaster(const FatouCoordinate& fc, int n, int basin_iter)
    : fc_(fc), n_(n), basin_iter_(basin_iter) {
  rho_ = std::max(2.0, std::abs(fc.a()) + 1.0);
  h_ = 2 * rho_ / n;
  basin_.assign(static_cast<std::size_t>(n) * n, -1);
  star_.assign(static_cast<std::size_t>(n) * n, -1);

  // seeds: pixels holding the forward orbit of v+ whose centres are certified
  // to lie in the maximal petal
  cplx z = critical_values(fc.a()).plus;
  for (int j = 0; j < 200 && std::abs(z) > h_; ++j, z = fc.map(z)) {
    const int i = index_of(z.real()), k = index_of(z.imag());
    if (i < 0 || k < 0) continue;
    const std::size_t id = static_cast<std::size_t>(i) * n_ + k;
    if (star_[id] == 1) continue;
    if (basin_pixel(i, k) && fc.in_petal(centre(i, k))) star_[id] = 1;
  }
}

int BasinRaster::index_of(double x) const {
  // symmetric about 0 so that conjugate parameters see mirrored rasters
  const int k = static_cast<int>(std::floor(std::abs(x) / h_));
  if (k >= n_ / 2) return -1;
  return x >= 0 ? n_ / 2 + k : n_ / 2 - 1 - k;
}

cplx BasinRaster::centre(int i, int j) const {
  return {(i - n_ / 2 + 0.5) * h_, (j - n_ / 2 + 0.5) * h_};
}

bool BasinRaster::basin_pixel(int i, int j) {
  auto& b = basin_[static_cast<std::size_t>(i) * n_ + j];
  if (b < 0) b = fc_.sector_entry(centre(i, j), basin_iter_) >= 0 ? 1 : 0;
  return b == 1;
}

int BasinRaster::in_immediate_basin(cplx z) {
  const int i0 = index_of(z.real()), j0 = index_of(z.imag());
  if (i0 < 0 || j0 < 0) return -1;
  auto id = [this](int i, int j) { return static_cast<std::size_t>(i) * n_ + j; };

  std::vector<std::pair<int, int>> start;
  bool own = basin_pixel(i0, j0);
  if (own) {
    if (star_[id(i0, j0)] >= 0) return star_[id(i0, j0)];
    start.push_back({i0, j0});
  } else {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const int i = i0 + di, j = j0 + dj;
        if (i < 0 || j < 0 || i >= n_ || j >= n_) continue;
        if (basin_pixel(i, j)) start.push_back({i, j});
      }
    if (start.empty()) return -1;
  }

  std::vector<cplx> seeds;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (star_[id(i, j)] == 1) seeds.push_back(centre(i, j));
  if (seeds.empty()) return -1;
  auto priority = [&](int i, int j) {
    double best = 1e300;
    const cplx c = centre(i, j);
    for (cplx s : seeds) best = std::min(best, std::abs(c - s));
    return best;
  };

  // best-first search toward the seeds through basin pixels
  using Item = std::pair<double, std::pair<int, int>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
  std::vector<char> seen(static_cast<std::size_t>(n_) * n_, 0);
  std::vector<std::size_t> visited;
  for (auto [i, j] : start) {
    open.push({priority(i, j), {i, j}});
    seen[id(i, j)] = 1;
  }
  int found = 0;
  while (!open.empty()) {
    const auto [i, j] = open.top().second;
    open.pop();
    visited.push_back(id(i, j));
    if (star_[id(i, j)] >= 0) {
      found = star_[id(i, j)];
      break;
    }
    static const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int a = i + di[d], b = j + dj[d];
      if (a < 0 || b < 0 || a >= n_ || b >= n_ || seen[id(a, b)]) continue;
      seen[id(a, b)] = 1;
      if (!basin_pixel(a, b)) continue;
      open.push({priority(a, b), {a, b}});
    }
  }
  // the explored set is connected, so its verdict is shared; when we started
  // from several neighbours that no longer holds
  if (own)
    for (auto v : visited) star_[v] = static_cast<signed char>(found);
  return found;
}

CaptureVerdict capture_depth(cplx a, int max_depth, const CapturePolicy& policy) {
  if (std::abs(a) < 1e-12) fail(ErrorCode::DegenerateParameter, "a = 0");
  CaptureVerdict out;
  const cplx cm = critical_points(a).minus;
  if (escape_classify(a, cm, policy.escape_iter).escaped) {
    out.kind = CaptureVerdict::Kind::Escape;
    return out;
  }
  FatouPolicy fp;
  fp.sector_w0 = policy.sector_w0;
  std::optional<FatouCoordinate> fco;
  try {
    fco.emplace(a, fp);
  } catch (const DomainError&) {
    return out;  // v+ does not reach the sector within budget (a near 0)
  }
  const FatouCoordinate& fc = *fco;
  std::vector<cplx> orbit{cm};
  for (int m = 1; m <= max_depth + 1; ++m) orbit.push_back(f(a, orbit.back()));

  auto verdict_of = [&](int m, double h) {
    CaptureVerdict v;
    v.resolution = h;
    if (m < 0) return v;
    v.kind = m == 0 ? CaptureVerdict::Kind::Adjacent : CaptureVerdict::Kind::Capture;
    v.n = std::max(0, m - 1);
    return v;
  };
  auto level = [&](int n) {
    BasinRaster raster(fc, n, policy.basin_iter);
    for (int m = 0; m <= max_depth + 1; ++m) {
      if (orbit[m] != 0.0 && fc.in_petal(orbit[m])) return verdict_of(m, raster.pixel());
      const int r = raster.in_immediate_basin(orbit[m]);
      if (r == 1) return verdict_of(m, raster.pixel());
      if (r < 0) return verdict_of(-1, raster.pixel());
    }
    return verdict_of(-1, raster.pixel());
  };
  auto same = [](const CaptureVerdict& x, const CaptureVerdict& y) {
    return x.kind == y.kind && x.n == y.n && x.kind != CaptureVerdict::Kind::Undetermined;
  };

  if (policy.ladder.size() == 1) return level(policy.ladder[0]);
  CaptureVerdict prev = level(policy.ladder[0]);
  for (std::size_t l = 1; l < policy.ladder.size(); ++l) {
    CaptureVerdict cur = level(policy.ladder[l]);
    if (same(prev, cur)) return cur;
    prev = cur;
  }
  out.resolution = prev.resolution;
  return out;
}

IInvariant i_invariant(cplx a) {
  const FatouCoordinate fc(a);
  const auto v = critical_values(a);
  const auto p = fc.try_eval(v.plus), m = fc.try_eval(v.minus);
  if (!p || !m) fail(ErrorCode::NotApplicable, "a critical orbit misses the petal");
  const cplx d = *p - *m;
  return {std::abs(d.imag()), d.real()};
}

}  // namespace per1
