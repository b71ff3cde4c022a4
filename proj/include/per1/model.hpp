#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "per1/boettcher.hpp"
#include "per1/fatou.hpp"

namespace per1 {

using Polyline = std::vector<cplx>;

// The model P(z) = z^2 + 1/4 with phi(0) = 0.
const FatouCoordinate& model_coordinate();
cplx model_fatou(cplx z);
cplx model_petal_inverse(cplx w);

// Arcs of E(n) = P^-n(E(0)), E(0) the Re phi = 1 boundary of P(petal). Each arc
// runs from a preimage of 1/4 to a preimage of 1/2; samples per arc.
std::vector<Polyline> model_equipotential(int n, int samples = 200);

// theta = sign / (2^l - 1), l >= 2
struct InternalAngle {
  int l = 2;
  int sign = 1;
  static InternalAngle parse(const std::string& s);  // "1/3", "-1/7"
  RationalAngle rational() const;
  std::string str() const;
};

struct InternalRay {
  InternalAngle angle;
  std::vector<Polyline> links;  // links[0] is the seed segment delta
  cplx tail;                    // end of the last link
};

struct InternalRayOptions {
  int samples_L = 96;
  int samples_Lprime = 64;
};

// Lift a polyline through the map of fc by continuity, from x0 over curve[0].
// When x0 is the critical point, x1 fixes the root over curve[1].
// Throws RayHitsCriticalValue when two preimages cannot be told apart.
Polyline lift_polyline(const FatouCoordinate& fc, const Polyline& curve, cplx x0,
                       std::optional<cplx> x1 = std::nullopt);

InternalRay model_internal_ray(const InternalAngle& theta, int n_links,
                               const InternalRayOptions& opt = {});
InternalRay dynamical_internal_ray(cplx a, const InternalAngle& theta, int n_links,
                                   const InternalRayOptions& opt = {});

enum class Side { Plus, Minus, Lobe, Critical };
const char* side_name(Side s);

struct ConjugacyLift {
  cplx a;
  std::vector<Side> sides;  // one per pull-back, outermost first
  cplx value;
  int k = 0;                // iterates needed to reach the petal
};

// h_a: immediate basin of f_a -> basin of P. The side curve for the pull-back
// is built on first use and kept for later lifts.
class ConjugacyLifter {
 public:
  explicit ConjugacyLifter(cplx a);
  ~ConjugacyLifter();
  ConjugacyLifter(const ConjugacyLifter&) = delete;
  ConjugacyLifter& operator=(const ConjugacyLifter&) = delete;

  ConjugacyLift lift(cplx z) const;
  Side side(cplx x) const;  // Plus or Minus for points off the figure eight
  const FatouCoordinate& fatou() const { return fc_; }
  const Polyline& separator() const;

 private:
  struct Separator;
  void build() const;
  cplx a_;
  FatouCoordinate fc_;
  mutable std::unique_ptr<Separator> sep_;
};

ConjugacyLift lift_to_model(cplx a, cplx z);
cplx phi_adjacent(cplx a);
cplx phi_capture(cplx a, int n);

// Extended Fatou value of the free critical orbit: fatou_a(v_-(a)), and for a
// capture component fatou_a(f^{n+1}(c_-(a))).
cplx psi(cplx a);
cplx psi_capture(cplx a, int n);

struct ParamCurve {
  std::string id;
  Polyline points;
  bool complete = true;
  std::string reason;  // why the curve was truncated
};

struct ContinuationBudget {
  double tau_max = 1e3;
  double tau_min = 1e-6;
  int max_steps = 4000;
  double min_step = 1e-7;
};

// gamma: the part of the U0 boundary of Phi^-1(Omega~) in S, from sqrt3 to 2.
ParamCurve parameter_gamma(const ContinuationBudget& b = {});
// E(n) in U0 n S, n >= 1, continued from the parameters where f^{n+1}(c-) = v+.
std::vector<ParamCurve> parameter_equipotential_u0(int n, const ContinuationBudget& b = {});
// E(0) in U0: the segment [0, sqrt3] and gamma.
std::vector<ParamCurve> parameter_e0_u0(const ContinuationBudget& b = {});
ParamCurve parameter_internal_ray_u0(const InternalAngle& theta, int n_links,
                                     const ContinuationBudget& b = {});
// E(0) of the capture component of depth n with the given centre.
ParamCurve capture_equipotential(cplx centre, int n, const ContinuationBudget& b = {});
// E(j), j >= 1, of the same component: the arcs through the parameters in the
// component, within radius of the centre, where f^{n+j+1}(c-) = v+.
std::vector<ParamCurve> capture_equipotential_level(cplx centre, int n, int j,
                                                    double radius = 0.3,
                                                    const ContinuationBudget& b = {});

// {curve_id, seq, re, im} per line
std::string polylines_to_jsonl(const std::vector<std::pair<std::string, Polyline>>& curves);

}  // namespace per1
