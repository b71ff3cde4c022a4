#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"
#include "per1/puzzle.hpp"

using namespace per1;

namespace {

// centre of a period-2 copy attached to the boundary of U0, outside W(0)
const cplx kNoWake(2.2075387674, 0.5926395119);
// c- = -i is a superattracting fixed point; inside W(0)
const cplx kWake(0, 1);

double distance_to(const Polyline& poly, cplx z) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const cplx p = poly[i], d = poly[i + 1] - p;
    const double u = std::clamp(std::real((z - p) * std::conj(d)) / std::norm(d), 0.0, 1.0);
    best = std::min(best, std::abs(z - p - u * d));
  }
  return best;
}

const std::vector<DynGraph>& tower(bool wake) {
  static const auto y = graph_tower_Y(kNoWake, 4, false);
  static const auto w = graph_tower_Y(kWake, 4, true);
  return wake ? w : y;
}

int count(const DynGraph& g, ArcLabel::Kind k) {
  return int(std::count_if(g.arcs.begin(), g.arcs.end(),
                           [k](const GraphArc& a) { return a.label.kind == k; }));
}

}  // namespace

TEST_CASE("cubic preimages") {
  for (cplx a : {cplx(1, 0), cplx(2, 1), cplx(0, 3), kNoWake})
    for (cplx p : {cplx(0, 0), cplx(0.3, -0.2), cplx(5, 5)}) {
      const auto r = cubic_preimages(a, p);
      for (cplx z : r) CHECK(std::abs(f(a, z) - p) < 1e-12 * std::max(1.0, std::abs(p)));
      CHECK(std::abs(r[0] + r[1] + r[2] + a) < 1e-12);
    }
}

TEST_CASE("Y graph arc counts and angles") {
  for (bool wake : {false, true}) {
    const auto& t = tower(wake);
    for (const auto& g : t) {
      int q = 1;
      for (int k = 0; k < g.depth; ++k) q *= 3;
      CHECK(count(g, ArcLabel::Kind::ExternalRay) == (wake ? 2 : 1) * q);
      CHECK(count(g, ArcLabel::Kind::PetalBoundary) == 2 * q);
      CHECK(count(g, ArcLabel::Kind::Equipotential) == 1);
      std::set<std::pair<std::int64_t, std::int64_t>> angles;
      for (const auto& arc : g.arcs) {
        if (arc.label.kind != ArcLabel::Kind::ExternalRay) continue;
        const auto s = arc.label.angle.times3(g.depth);
        CHECK((s == RationalAngle(0, 1) || (wake && s == RationalAngle(1, 2))));
        angles.insert({arc.label.angle.num(), arc.label.angle.den()});
        // landing vertices are preimages of the parabolic point
        REQUIRE(arc.landing);
        cplx z = *arc.landing;
        for (int k = 0; k < g.depth; ++k) z = f(g.a, z);
        CHECK(std::abs(z) < 1e-10);
      }
      CHECK(int(angles.size()) == count(g, ArcLabel::Kind::ExternalRay));
    }
  }
}

TEST_CASE("f maps the graph of depth m+1 onto the graph of depth m") {
  for (bool wake : {false, true}) {
    const auto& t = tower(wake);
    for (std::size_t m = 0; m + 1 < t.size(); ++m) {
      const auto& fine = t[m + 1];
      const auto& coarse = t[m];
      std::map<std::pair<std::int64_t, std::int64_t>, const GraphArc*> rays;
      for (const auto& arc : coarse.arcs)
        if (arc.label.kind == ArcLabel::Kind::ExternalRay)
          rays[{arc.label.angle.num(), arc.label.angle.den()}] = &arc;
      double worst = 0;
      for (const auto& arc : fine.arcs) {
        if (arc.label.kind == ArcLabel::Kind::Equipotential) {
          for (std::size_t k = 0; k < arc.polyline.size(); k += 37)
            CHECK(std::abs(green_function(fine.a, arc.polyline[k]) - fine.level()) < 1e-9);
          continue;
        }
        std::vector<const Polyline*> targets;
        if (arc.label.kind == ArcLabel::Kind::ExternalRay) {
          const auto s = arc.label.angle.times3();
          REQUIRE(rays.count({s.num(), s.den()}) == 1);
          targets.push_back(&rays[{s.num(), s.den()}]->polyline);
        } else {
          for (const auto& c : coarse.arcs)
            if (c.label.kind == arc.label.kind) targets.push_back(&c.polyline);
        }
        for (std::size_t k = 0; k < arc.polyline.size(); k += 7) {
          const cplx w = f(fine.a, arc.polyline[k]);
          double d = 1e300;
          for (const auto* p : targets) d = std::min(d, distance_to(*p, w));
          worst = std::max(worst, d);
        }
      }
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("pieces nest and touch the equipotential") {
  for (bool wake : {false, true}) {
    const auto& t = tower(wake);
    const auto grid = default_grid(t[0].a, t[0].log_r, 512);
    std::vector<PuzzleMap> maps;
    const cplx vminus = critical_values(t[0].a).minus;
    int prev_crit = -1;
    for (const auto& g : t) {
      maps.emplace_back(g, grid);
      const auto& map = maps.back();
      REQUIRE(!map.pieces().empty());
      ArcLabel e;
      e.level = g.level();
      for (const auto& p : map.pieces()) {
        CHECK(std::count(p.boundary_labels.begin(), p.boundary_labels.end(), e.str()) == 1);
        CHECK(p.diameter > 0);
      }
      const auto loc = map.locate(vminus);
      REQUIRE(loc.kind == Location::Kind::Piece);
      if (maps.size() > 1) {
        const auto& coarse = maps[maps.size() - 2];
        CHECK(containment_fraction(map, coarse) == 1.0);
        // the critical piece refines the previous one
        const auto cells = map.piece_cells();
        for (const auto& [i, j] : cells[loc.piece])
          CHECK(coarse.resolved_cell(i, j) == prev_crit);
      }
      prev_crit = loc.piece;
    }
  }
}

TEST_CASE("point location") {
  const auto& g = tower(false)[2];
  const PuzzleMap map(g, default_grid(g.a, g.log_r, 512));
  const auto e = dynamical_equipotential(g.a, g.level(), 64);
  for (cplx z : e) CHECK(map.locate(z).kind == Location::Kind::Boundary);
  CHECK(map.locate(40.0).kind == Location::Kind::Outside);
  const FatouCoordinate fc(g.a);
  CHECK(map.locate(fc.petal_inverse(3.0)).kind == Location::Kind::Hole);
  for (const auto& arc : g.arcs)
    if (arc.label.kind == ArcLabel::Kind::ExternalRay)
      CHECK(map.locate(arc.polyline[arc.polyline.size() / 2]).kind == Location::Kind::Boundary);
}

TEST_CASE("adjacent pieces at the parabolic point shrink") {
  for (bool wake : {false, true}) {
    const auto& t = tower(wake);
    const auto grid = default_grid(t[0].a, t[0].log_r, 512);
    double last_plus = 1e300, last_minus = 1e300;
    for (const auto& g : t) {
      if (g.depth == 0) continue;  // both sides of the graph belong to one face
      const PuzzleMap map(g, grid);
      const auto q = adjacent_pieces_at_zero_preimage(map, 0.0);
      REQUIRE(q.plus >= 0);
      REQUIRE(q.minus >= 0);
      CHECK(q.plus != q.minus);
      CHECK(q.rays.size() == (wake ? 2u : 1u));
      const double dp = map.pieces()[q.plus].diameter, dm = map.pieces()[q.minus].diameter;
      CHECK(dp < last_plus);
      CHECK(dm < last_minus);
      last_plus = dp;
      last_minus = dm;
      if (wake) CHECK(std::abs(dp - dm) < 2 * grid.pixel());  // a = i is symmetric
    }
    const PuzzleMap map(t[1], grid);
    CHECK_THROWS_AS(adjacent_pieces_at_zero_preimage(map, 0.123), DomainError);
  }
}

TEST_CASE("extraction is deterministic") {
  const auto& g = tower(true)[3];
  const auto grid = default_grid(g.a, g.log_r, 384);
  CHECK(pieces_to_json(PuzzleMap(g, grid)) == pieces_to_json(PuzzleMap(build_graph_Y(kWake, 3, true), grid)));
  const auto j = nlohmann::json::parse(pieces_to_json(PuzzleMap(g, grid)));
  CHECK(j["depth"] == 3);
  CHECK(j["pieces"][0].contains("boundary"));
  CHECK(j["pieces"][0]["piece_id"] == 0);
}

TEST_CASE("graph errors") {
  CHECK_THROWS_AS(build_graph_Y(kNoWake, 6, false), DomainError);
  try {
    build_graph_Y(kNoWake, 0, true);
    FAIL("ray 1/2 should not land at 0 outside the wake");
  } catch (const DomainError& e) {
    CHECK(e.code() == ErrorCode::NotApplicable);
  }
  // at a Misiurewicz-parabolic parameter with f^2(c-) = 0 the critical value is
  // a landing vertex of depth 1, so the lift to depth 2 crashes
  const auto roots = solve_misiurewicz_parabolic(1, Window{0, 2.5, 0.1, 2.5});
  REQUIRE(!roots.empty());
  try {
    build_graph_Y(roots[0], 2, false);
    FAIL("expected a crash");
  } catch (const DomainError& e) {
    CHECK(e.code() == ErrorCode::RayCrash);
  }
}

TEST_CASE("X graph") {
  const auto t = graph_tower_X(kNoWake, 2, 2);
  const auto& g0 = t[0];
  CHECK(count(g0, ArcLabel::Kind::InternalRay) == 2);
  CHECK(count(g0, ArcLabel::Kind::ExternalRay) == 2);
  std::vector<const GraphArc*> internal;
  for (const auto& arc : g0.arcs) {
    if (arc.label.kind == ArcLabel::Kind::InternalRay) internal.push_back(&arc);
    if (arc.label.kind != ArcLabel::Kind::ExternalRay) continue;
    // an independent trace lands with the internal ray
    const auto tr = trace_dynamical_ray(g0.a, arc.label.angle, 1e-40);
    double d = 1e300;
    for (const auto& other : g0.arcs)
      if (other.label.kind == ArcLabel::Kind::InternalRay)
        d = std::min(d, std::abs(*other.landing - tr.landing.point));
    CHECK(d < 2e-3);
  }
  // the internal cycle is disjoint away from the petal
  const FatouCoordinate fc(g0.a);
  double gap = 1e300;
  for (cplx z : internal[0]->polyline) {
    const auto w = fc.try_eval(z);
    if (w && w->real() > 0.5) continue;
    gap = std::min(gap, distance_to(internal[1]->polyline, z));
  }
  CHECK(gap > 1e-3);
  // pull-back closure
  CHECK(count(t[2], ArcLabel::Kind::InternalRay) == 18);
  for (const auto& arc : t[2].arcs)
    if (arc.label.kind == ArcLabel::Kind::InternalRay) {
      const cplx w = f(g0.a, arc.polyline[arc.polyline.size() / 2]);
      double d = 1e300;
      for (const auto& c : t[1].arcs)
        if (c.label.kind == ArcLabel::Kind::InternalRay) d = std::min(d, distance_to(c.polyline, w));
      CHECK(d < 1e-5);
    }

  const auto rows = nesting_report(kNoWake, 2, {0, 1, 2, 3}, default_grid(kNoWake, 1.0, 512));
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.critical_piece >= 0);
    CHECK(r.contained);
  }
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].diameter <= rows[k - 1].diameter);
  const auto csv = nesting_to_csv(rows);
  CHECK(csv.rfind("depth,critical_piece,contained,compact_inside,diameter\n", 0) == 0);
}

TEST_CASE("parameter graph angles") {
  std::vector<std::string> s;
  for (const auto& t : para_graph_angles(1)) s.push_back(t.str());
  CHECK(s == std::vector<std::string>{"0/1", "1/3", "1/2", "2/3", "5/6"});
  CHECK(para_graph_angles(2).size() == 9 + 5);
  CHECK_THROWS_AS(para_graph_angles(3), DomainError);
}

TEST_CASE("parameter graph of depth 1") {
  const auto pg = build_para_graph(DynGraph::Kind::Y, 1);
  int rays = 0;
  for (const auto& arc : pg.arcs) {
    if (arc.label.kind != ArcLabel::Kind::ExternalRay) continue;
    ++rays;
    CHECK(arc.landing.has_value());
  }
  CHECK(rays == 6);  // angle 0 on both sides of W(0)
  CHECK(arc_clusters(pg.arcs, 1e-3) == 1);
  CHECK_THROWS_AS(build_para_graph(DynGraph::Kind::X, 1), DomainError);
}
