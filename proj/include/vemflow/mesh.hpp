#pragma once

#include "vemflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace vemflow {

enum class BoundaryMarker { interior, dirichlet, neumann };

inline const char* to_string(BoundaryMarker m) {
  switch (m) {
    case BoundaryMarker::interior: return "interior";
    case BoundaryMarker::dirichlet: return "dirichlet";
    case BoundaryMarker::neumann: return "neumann";
  }
  return "?";
}

/// Canonical edge key (min vertex, max vertex).
using EdgeKey = std::pair<int, int>;

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

struct MeshEdge {
  std::array<int, 2> vertices{};        // canonical: vertices[0] < vertices[1]
  std::array<int, 2> cells{-1, -1};     // cells[1] == -1 on the boundary
  BoundaryMarker marker = BoundaryMarker::interior;

  bool on_boundary() const { return cells[1] < 0; }
};

/// Boundary marker assignment: either a predicate on the edge midpoint or explicit key lists.
/// Explicit lists take precedence; edges in neither fall back to the predicate, if any.
struct BoundarySpec {
  std::function<BoundaryMarker(const Point& midpoint)> by_midpoint;
  std::vector<EdgeKey> dirichlet;
  std::vector<EdgeKey> neumann;

  static BoundarySpec all_dirichlet() {
    return {[](const Point&) { return BoundaryMarker::dirichlet; }, {}, {}};
  }
};

/// Immutable polygonal mesh: CCW cells, deduplicated edges with boundary markers.
class PolygonalMesh {
 public:
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  /// Global edge id of the local edge i (vertex i -> vertex i+1) of each cell.
  const std::vector<std::vector<int>>& cell_edges() const { return cell_edges_; }
  /// Non-fatal notes produced while building (e.g. reoriented cells).
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::size_t n_vertices() const { return vertices_.size(); }
  std::size_t n_cells() const { return cells_.size(); }
  std::size_t n_edges() const { return edges_.size(); }

  std::vector<Point> cell_points(std::size_t c) const {
    std::vector<Point> p;
    p.reserve(cells_[c].size());
    for (int v : cells_[c]) p.push_back(vertices_[static_cast<std::size_t>(v)]);
    return p;
  }

  std::optional<int> find_edge(int a, int b) const {
    auto it = edge_index_.find(edge_key(a, b));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }

  bool has_neumann() const {
    return std::any_of(edges_.begin(), edges_.end(),
                       [](const MeshEdge& e) { return e.marker == BoundaryMarker::neumann; });
  }

  /// Maximum cell diameter.
  double h() const {
    double h = 0.0;
    for (std::size_t c = 0; c < n_cells(); ++c) {
      const auto p = cell_points(c);
      for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) h = std::max(h, (p[i] - p[j]).norm());
    }
    return h;
  }

  double total_area() const {
    double a = 0.0;
    for (std::size_t c = 0; c < n_cells(); ++c) a += signed_area(cell_points(c));
    return a;
  }

 private:
  friend PolygonalMesh build_mesh(std::vector<Point>, std::vector<std::vector<int>>,
                                  const BoundarySpec&);
  std::vector<Point> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::map<EdgeKey, int> edge_index_;
  std::vector<std::string> warnings_;
};

/// Validates the input, reorients clockwise cells (with a warning), deduplicates edges
/// and assigns boundary markers. Throws MeshError on any invariant violation.
inline PolygonalMesh build_mesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                                const BoundarySpec& boundary) {
  PolygonalMesh m;
  const int nv = static_cast<int>(vertices.size());
  std::vector<bool> used(vertices.size(), false);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& cell = cells[c];
    if (cell.size() < 3)
      throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : cell) {
      if (v < 0 || v >= nv)
        throw MeshError("cell " + std::to_string(c) + " references vertex " + std::to_string(v) +
                        " out of range");
      used[static_cast<std::size_t>(v)] = true;
    }
    auto sorted = cell;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw MeshError("cell " + std::to_string(c) + " repeats a vertex index");
    std::vector<Point> pts;
    for (int v : cell) pts.push_back(vertices[static_cast<std::size_t>(v)]);
    if (!is_simple_polygon(pts))
      throw MeshError("cell " + std::to_string(c) + " is not a simple polygon");
    if (signed_area(pts) < 0) {
      std::reverse(cell.begin(), cell.end());
      m.warnings_.push_back("cell " + std::to_string(c) + " was clockwise and has been reoriented");
    }
  }
  for (int v = 0; v < nv; ++v)
    if (!used[static_cast<std::size_t>(v)])
      throw MeshError("vertex " + std::to_string(v) + " is not referenced by any cell");

  // Directed half-edges detect overlapping cells (same edge twice in the same direction).
  std::map<std::pair<int, int>, int> directed;
  m.cell_edges_.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const int a = cell[i], b = cell[(i + 1) % cell.size()];
      if (!directed.emplace(std::pair{a, b}, static_cast<int>(c)).second)
        throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") is traversed twice in the same direction (cell " +
                        std::to_string(c) + ")");
      const EdgeKey key = edge_key(a, b);
      auto [it, inserted] = m.edge_index_.emplace(key, static_cast<int>(m.edges_.size()));
      if (inserted) {
        MeshEdge e;
        e.vertices = {key.first, key.second};
        e.cells = {static_cast<int>(c), -1};
        m.edges_.push_back(e);
      } else {
        auto& e = m.edges_[static_cast<std::size_t>(it->second)];
        if (e.cells[1] >= 0)
          throw MeshError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                          ") has more than two adjacent cells");
        e.cells[1] = static_cast<int>(c);
      }
      m.cell_edges_[c].push_back(it->second);
    }
  }

  std::map<EdgeKey, BoundaryMarker> explicit_markers;
  for (const auto& k : boundary.dirichlet) explicit_markers[edge_key(k.first, k.second)] = BoundaryMarker::dirichlet;
  for (const auto& k : boundary.neumann) explicit_markers[edge_key(k.first, k.second)] = BoundaryMarker::neumann;
  for (std::size_t id = 0; id < m.edges_.size(); ++id) {
    auto& e = m.edges_[id];
    const EdgeKey key{e.vertices[0], e.vertices[1]};
    if (!e.on_boundary()) {
      if (explicit_markers.count(key))
        throw MeshError("interior edge (" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ") carries a boundary marker");
      continue;
    }
    if (auto it = explicit_markers.find(key); it != explicit_markers.end()) {
      e.marker = it->second;
    } else if (boundary.by_midpoint) {
      const Point mid = 0.5 * (vertices[static_cast<std::size_t>(key.first)] +
                               vertices[static_cast<std::size_t>(key.second)]);
      e.marker = boundary.by_midpoint(mid);
    }
    if (e.marker == BoundaryMarker::interior)
      throw MeshError("boundary edge (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") has no boundary marker");
  }
  for (const auto& [key, marker] : explicit_markers)
    if (!m.edge_index_.count(key))
      throw MeshError("marked edge (" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") is not an edge of the mesh");

  m.vertices_ = std::move(vertices);
  m.cells_ = std::move(cells);
  return m;
}

inline ElementGeometry element_geometry(const PolygonalMesh& mesh, std::size_t cell) {
  const auto pts = mesh.cell_points(cell);
  return compute_geometry(pts);
}

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Box {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<Point> grid_vertices(int n, const Box& box) {
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      v.emplace_back(box.x0 + (box.x1 - box.x0) * i / n, box.y0 + (box.y1 - box.y0) * j / n);
  return v;
}

}  // namespace detail

/// n x n quadrilateral grid with interior vertices displaced by a seeded uniform sample
/// in [-beta*hx, beta*hx] x [-beta*hy, beta*hy]. A displacement that makes an adjacent
/// cell non-simple is redrawn, up to 32 times per vertex.
inline PolygonalMesh generate_quadrilateral_distorted(int n, double beta, std::uint64_t seed,
                                                      const Box& box = {},
                                                      const BoundarySpec& boundary =
                                                          BoundarySpec::all_dirichlet()) {
  if (n < 1) throw ConfigError("quadrilateral mesh needs n >= 1");
  if (beta < 0.0 || beta >= 0.5) throw ConfigError("distortion must lie in [0, 0.5)");
  auto verts = detail::grid_vertices(n, box);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});

  if (beta > 0.0) {
    const double hx = (box.x1 - box.x0) / n, hy = (box.y1 - box.y0) / n;
    std::mt19937_64 rng(seed);
    auto cell_ok = [&](int ci, int cj) {
      if (ci < 0 || cj < 0 || ci >= n || cj >= n) return true;
      const auto& c = cells[static_cast<std::size_t>(cj * n + ci)];
      std::vector<Point> p;
      for (int v : c) p.push_back(verts[static_cast<std::size_t>(v)]);
      return is_simple_polygon(p) && signed_area(p) > 0;
    };
    for (int j = 1; j < n; ++j)
      for (int i = 1; i < n; ++i) {
        const Point base = verts[static_cast<std::size_t>(id(i, j))];
        bool ok = false;
        for (int attempt = 0; attempt < 32 && !ok; ++attempt) {
          const double dx = beta * hx * (2.0 * detail::uniform01(rng) - 1.0);
          const double dy = beta * hy * (2.0 * detail::uniform01(rng) - 1.0);
          verts[static_cast<std::size_t>(id(i, j))] = base + Point(dx, dy);
          ok = cell_ok(i - 1, j - 1) && cell_ok(i, j - 1) && cell_ok(i - 1, j) && cell_ok(i, j);
        }
        if (!ok)
          throw MeshError("distortion produced a non-simple cell at vertex (" + std::to_string(i) +
                          "," + std::to_string(j) + ") after 32 retries");
      }
  }
  return build_mesh(std::move(verts), std::move(cells), boundary);
}

/// n x n grid with each square split into two right triangles by the diagonal
/// (i, j) -> (i+1, j+1).
inline PolygonalMesh generate_triangular(int n, const Box& box = {-1.0, 1.0, -1.0, 1.0},
                                         const BoundarySpec& boundary =
                                             BoundarySpec::all_dirichlet()) {
  if (n < 1) throw ConfigError("triangular mesh needs n >= 1");
  auto verts = detail::grid_vertices(n, box);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return build_mesh(std::move(verts), std::move(cells), boundary);
}

// ---- regularity -------------------------------------------------------------------------

struct CellRegularity {
  std::size_t cell = 0;
  double edge_ratio = 0.0;  // min edge / h_E
  double ball_ratio = 0.0;  // star-shapedness certificate radius / h_E
  bool convex = true;
  bool passes = true;
};

struct RegularityReport {
  double rho = 0.0;
  std::vector<CellRegularity> cells;
  std::vector<std::size_t> violating;
  bool ok() const { return violating.empty(); }
};

namespace detail {

// Largest inscribed disc of the convex region {x : a_i . x <= b_i}, by enumerating
// vertices of the (x, y, t) LP over triples of constraints.
inline double chebyshev_radius(const std::vector<Eigen::Vector2d>& normals,
                               const std::vector<double>& offsets) {
  const std::size_t m = normals.size();
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t l = j + 1; l < m; ++l) {
        Eigen::Matrix3d a;
        Eigen::Vector3d b;
        const std::size_t ids[3] = {i, j, l};
        for (int r = 0; r < 3; ++r) {
          const auto& nr = normals[ids[r]];
          a.row(r) << nr.x(), nr.y(), nr.norm();
          b[r] = offsets[ids[r]];
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
        if (!lu.isInvertible()) continue;
        const Eigen::Vector3d x = lu.solve(b);
        if (x[2] <= best) continue;
        bool feasible = true;
        for (std::size_t r = 0; r < m && feasible; ++r)
          feasible = normals[r].dot(x.head<2>()) + x[2] * normals[r].norm() <= offsets[r] + 1e-12;
        if (feasible) best = x[2];
      }
  return best;
}

}  // namespace detail

/// Mesh regularity: every edge >= rho*h_E and a ball of radius >= rho*h_E w.r.t. which the
/// cell is star-shaped. Convex cells use the centroid inradius estimate; non-convex cells
/// use the Chebyshev radius of the polygon kernel.
inline CellRegularity cell_regularity(std::span<const Point> poly, double rho) {
  CellRegularity r;
  const auto g = compute_geometry(poly);
  r.edge_ratio = *std::min_element(g.edge_lengths.begin(), g.edge_lengths.end()) / g.diameter;
  r.convex = is_convex_polygon(poly);
  const std::size_t n = poly.size();
  if (r.convex) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      dmin = std::min(dmin, std::abs(cross2(b - a, g.centroid - a)) / (b - a).norm());
    }
    r.ball_ratio = dmin / g.diameter;
  } else {
    // kernel = intersection of the inner half-planes of all edges (CCW)
    std::vector<Eigen::Vector2d> normals;
    std::vector<double> offsets;
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      const Eigen::Vector2d out(b.y() - a.y(), a.x() - b.x());
      normals.push_back(out);
      offsets.push_back(out.dot(a));
    }
    r.ball_ratio = detail::chebyshev_radius(normals, offsets) / g.diameter;
  }
  r.passes = r.edge_ratio >= rho && r.ball_ratio >= rho;
  return r;
}

inline RegularityReport check_mesh_regularity(const PolygonalMesh& mesh, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("regularity parameter must lie in (0, 1)");
  RegularityReport rep;
  rep.rho = rho;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    auto cr = cell_regularity(mesh.cell_points(c), rho);
    cr.cell = c;
    if (!cr.passes) rep.violating.push_back(c);
    rep.cells.push_back(cr);
  }
  return rep;
}

}  // namespace vemflow
