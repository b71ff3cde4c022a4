#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "per1/boettcher.hpp"
#include "per1/model.hpp"

namespace per1 {

struct ArcLabel {
  enum class Kind { ExternalRay, InternalRay, Equipotential, PetalBoundary };
  Kind kind = Kind::Equipotential;
  RationalAngle angle;  // external angle, or internal angle as a rational
  double level = 0;     // log r for equipotentials, model depth in parameter graphs
  std::string tag;      // component of a parameter equipotential, branch of a ray
  std::string str() const;
};

struct GraphArc {
  ArcLabel label;
  int depth = 0;
  Polyline polyline;
  std::optional<cplx> landing;  // exact landing vertex of an external ray
};

// The three roots of f_a(x) = p.
std::array<cplx, 3> cubic_preimages(cplx a, cplx p);

struct GraphOptions {
  double log_r = 1.0;            // E(r) at depth 0; depth m uses log_r / 3^m
  int equipotential_samples = 1024;
  int petal_samples = 200;       // per arc of the boundary of Omega~
  double ray_log_rmin = 1e-60;
  int internal_links = 24;
};

struct DynGraph {
  enum class Kind { Y, X };
  cplx a;
  Kind kind = Kind::Y;
  int depth = 0;
  bool wake = false;
  int l = 0;  // generator of the internal angle for X graphs
  double log_r = 1.0;
  std::vector<GraphArc> arcs;
  Polyline petal_image;  // closed boundary of Omega~ = {Re fatou > 1}
  double level() const;  // log_r / 3^depth
};

// Y graph: boundary of Omega~, the ray of angle 0 (and 1/2 in the wake of 0),
// E(r), pulled back m times. Throws RayCrash when a preimage ray crashes.
DynGraph build_graph_Y(cplx a, int m, bool wake, const GraphOptions& opt = {});
// X graph: boundary of Omega~, the internal ray cycle of 1/(2^l - 1), the
// external cycle landing with it, E(r), pulled back m times.
// Throws ObstructedInternalRay when the internal rays cannot be built.
DynGraph build_graph_X(cplx a, int m, int l, const GraphOptions& opt = {});
// Depths 0..m in one pass; element k is the graph of depth k.
std::vector<DynGraph> graph_tower_Y(cplx a, int m, bool wake, const GraphOptions& opt = {});
std::vector<DynGraph> graph_tower_X(cplx a, int m, int l, const GraphOptions& opt = {});

// Both dynamical rays of angle 0 and 1/2 land within 5e-3 of 0.
bool wake_test(cplx a);

// Fixed pixel grid shared by all depths of one parameter, so that pieces of
// different depths can be compared pixel by pixel.
struct PieceGrid {
  Window window;
  int n = 768;
  double pixel() const { return (window.re_max - window.re_min) / n; }
};
// Square window around E(r) of the depth-0 graph.
PieceGrid default_grid(cplx a, double log_r = 1.0, int n = 768);

struct PuzzlePiece {
  int id = 0;
  int depth = 0;
  std::vector<std::string> boundary_labels;
  Polyline polygon;  // convex hull of the cells, counter-clockwise
  double diameter = 0;
  std::size_t pixels = 0;
};

struct Location {
  enum class Kind { Piece, Boundary, Hole, Outside };
  Kind kind = Kind::Outside;
  int piece = -1;
};

// Faces of the complement of the graph inside the level-m equipotential,
// found as 4-connected components of grid cells. The basin part of the graph
// enters through its filled preimage f^-m(closure Omega~) (a cell is removed
// when its centre lies there); rays and internal rays are rasterised as walls.
class PuzzleMap {
 public:
  // kEnclosed: bounded faces whose boundary misses the equipotential
  static constexpr int kOutside = -1, kWall = -2, kHole = -3, kEnclosed = -4;

  PuzzleMap(const DynGraph& g, const PieceGrid& grid);

  const DynGraph& graph() const { return g_; }
  const PieceGrid& grid() const { return grid_; }
  const std::vector<PuzzlePiece>& pieces() const { return pieces_; }
  int cell(int i, int j) const { return label_[std::size_t(j) * grid_.n + i]; }
  std::optional<std::pair<int, int>> cell_of(cplx z) const;
  cplx centre(int i, int j) const;

  Location locate(cplx z) const;
  // Piece of the cell, with wall and hole cells resolved through locate.
  int resolved_cell(int i, int j) const;
  std::vector<std::vector<std::pair<int, int>>> piece_cells() const;

 private:
  struct HoleIndex;
  bool in_hole(cplx z) const;
  bool near_wall(cplx z, double tol) const;
  bool crosses_graph(cplx p, cplx q) const;
  DynGraph g_;
  PieceGrid grid_;
  std::shared_ptr<const HoleIndex> hole_;
  std::vector<int> label_;
  std::vector<std::vector<std::pair<int, int>>> wall_segments_;  // per cell
  std::vector<PuzzlePiece> pieces_;
};

PuzzleMap extract_pieces(const DynGraph& g, const PieceGrid& grid);

// The two pieces along the ray(s) landing at x, f^m(x) = 0. Single ray:
// plus on the left, minus on the right looking outward along the ray. Two
// rays t < t': plus touches R(t) only, minus touches R(t') only.
struct AdjacentPair {
  int plus = -1, minus = -1;
  std::vector<RationalAngle> rays;
};
AdjacentPair adjacent_pieces_at_zero_preimage(const PuzzleMap& map, cplx x);

struct NestingRow {
  int depth = 0;
  int critical_piece = -1;
  bool contained = true;      // every cell of this piece lies in the previous one
  bool compact_inside = true; // with a one-cell margin
  double diameter = 0;
};
std::vector<NestingRow> nesting_report(cplx a, int l, const std::vector<int>& depths,
                                       const PieceGrid& grid, const GraphOptions& opt = {});

// Fraction of the cells of every piece of `fine` that lie in one piece of `coarse`.
double containment_fraction(const PuzzleMap& fine, const PuzzleMap& coarse);

// Parameter graph of depth n <= 2 in the closure of W(0) and S.
struct ParaGraph {
  int depth = 0;
  DynGraph::Kind kind = DynGraph::Kind::Y;
  std::vector<GraphArc> arcs;
  std::vector<std::string> notes;  // branch used for each ray angle
};
// External angles of the parameter graph: 3^n t = 0, and 3^n t = 1/2 in [1/2, 1].
std::vector<RationalAngle> para_graph_angles(int n);
ParaGraph build_para_graph(DynGraph::Kind kind, int n, const GraphOptions& opt = {});
// Number of connected clusters of arcs, arcs joined when within tol.
int arc_clusters(const std::vector<GraphArc>& arcs, double tol);

std::string pieces_to_json(const PuzzleMap& map);
std::string nesting_to_csv(const std::vector<NestingRow>& rows);

}  // namespace per1
