#pragma once

// Local enhanced divergence-free velocity space of degree k >= 2 on a polygon.
//
// Local DoFs, in this order:
//   vertex values        2 per vertex
//   edge values          2 per point at the k-1 interior Gauss–Lobatto nodes of each edge
//                        (edge i runs from vertex i to vertex i+1, nodes in that direction)
//   interior moments     (1/|E|) int v . m_perp m_a,   a in M_{k-3}
//   divergence moments   (h/|E|) int div(v) m_a,       a in M_{k-1}, |a| > 0
// with m_perp = ((y - y_E)/h, -(x - x_E)/h).
//
// Everything computable from DoFs goes through integration by parts plus the split
// [P_n]^2 = grad P_{n+1} (+) m_perp P_{n-1}; the components of degree k-2 and k-1 in the
// m_perp part are taken from the H1 projection (enhancement constraint).

#include "vemflow/mesh.hpp"
#include "vemflow/poly.hpp"

#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace vemflow {

enum class DofKind { vertex_value, edge_value, interior_moment, divergence_moment };

struct DofLayout {
  int k = 2;
  int n_vertices = 0;
  std::vector<double> edge_nodes;  // k-1 parameters in (0, 1)

  int n_vertex_dofs() const { return 2 * n_vertices; }
  int n_edge_dofs() const { return 2 * n_vertices * (k - 1); }
  int n_interior_dofs() const { return poly_dim(k - 3); }
  int n_divergence_dofs() const { return poly_dim(k - 1) - 1; }
  int size() const {
    return n_vertex_dofs() + n_edge_dofs() + n_interior_dofs() + n_divergence_dofs();
  }

  int vertex_dof(int v, int c) const { return 2 * v + c; }
  int edge_dof(int e, int j, int c) const { return n_vertex_dofs() + 2 * ((k - 1) * e + j) + c; }
  /// a = monomial index in M_{k-3}
  int interior_dof(int a) const { return n_vertex_dofs() + n_edge_dofs() + a; }
  /// a = monomial index in M_{k-1}, a >= 1
  int divergence_dof(int a) const {
    return n_vertex_dofs() + n_edge_dofs() + n_interior_dofs() + a - 1;
  }
  /// Component-0 DoF of trace node j (0..k) on edge e; nodes 0 and k are the edge's vertices.
  int trace_node_dof(int e, int j) const {
    if (j == 0) return vertex_dof(e, 0);
    if (j == k) return vertex_dof((e + 1) % n_vertices, 0);
    return edge_dof(e, j - 1, 0);
  }

  DofKind kind(int i) const {
    if (i < n_vertex_dofs()) return DofKind::vertex_value;
    if (i < n_vertex_dofs() + n_edge_dofs()) return DofKind::edge_value;
    if (i < n_vertex_dofs() + n_edge_dofs() + n_interior_dofs()) return DofKind::interior_moment;
    return DofKind::divergence_moment;
  }
};

inline DofLayout dof_layout(int k, int n_vertices) {
  if (k < 2) throw ConfigError("velocity degree k must be at least 2");
  if (n_vertices < 3) throw ConfigError("a cell needs at least 3 vertices");
  return {k, n_vertices, gauss_lobatto_interior(k)};
}

/// Lagrange basis on nodes [0, interior..., 1] evaluated at s.
inline Vec trace_lagrange(const std::vector<double>& interior, double s) {
  std::vector<double> nodes{0.0};
  nodes.insert(nodes.end(), interior.begin(), interior.end());
  nodes.push_back(1.0);
  const std::size_t m = nodes.size();
  Vec l(static_cast<long>(m));
  for (std::size_t j = 0; j < m; ++j) {
    double v = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      if (i != j) v *= (s - nodes[i]) / (nodes[j] - nodes[i]);
    l[static_cast<long>(j)] = v;
  }
  return l;
}

/// Values at the interior trace nodes (direction a -> b) of the degree-k polynomial that
/// matches v at a and b and has the same moments as v against P_{k-2} on the edge.
inline Eigen::Matrix<double, Eigen::Dynamic, 2> edge_trace_interpolant(
    const Point& a, const Point& b, const VectorField& v, int k,
    const std::vector<double>& nodes) {
  const int m = k - 1;
  Eigen::Matrix<double, Eigen::Dynamic, 2> out(m, 2);
  const auto g = gauss_legendre(std::max(k + 2, 8));
  Mat lhs = Mat::Zero(m, m);
  Eigen::Matrix<double, Eigen::Dynamic, 2> rhs = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(m, 2);
  const Eigen::Vector2d va = v(a), vb = v(b);
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double s = g.points[q], w = g.weights[q];
    const Vec l = trace_lagrange(nodes, s);
    const Eigen::Vector2d vq = v(a + s * (b - a));
    double t = 1.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) lhs(i, j) += w * t * l[j + 1];
      rhs.row(i) += w * t * (vq - va * l[0] - vb * l[k]).transpose();
      t *= (s - 0.5);
    }
  }
  out = lhs.partialPivLu().solve(rhs);
  return out;
}

/// Local space with all DoF-computable operators, as matrices acting on local DoF vectors.
struct LocalSpace {
  int k = 2;
  DofLayout layout;
  std::vector<Point> vertices;
  ElementGeometry geometry;
  ScaledMonomials basis;  // degree k + 1, centred at the centroid, scaled by h_E
  Mat gram;               // exact Gram matrix of `basis`

  Mat pi_nabla;        // 2 dim(k)   x N : H1 projection, vector coefficients
  Mat pi_zero;         // 2 dim(k)   x N : L2 projection onto [P_k]^2
  Mat pi_grad;         // 4 dim(k-1) x N : L2 projection of grad v
  Mat pi_eps;          // 4 dim(k-1) x N : L2 projection of eps(v)
  Mat div_map;         // dim(k-1)   x N : coefficients of div v
  Mat div_moments;     // dim(k-1)   x N : int div(v) m_a
  Mat poly_dofs;       // N x 2 dim(k)   : DoFs of the vector monomials
  Mat projector_dofs;  // N x N          : DoFs of Pi0_k v

  QuadratureRule rule;  // integration rule for non-polynomial integrands
  double condition = 1.0;

  int n_dofs() const { return layout.size(); }
  double h() const { return geometry.diameter; }
  double area() const { return geometry.area; }
  Mat gram_block(int n) const { return gram.topLeftCorner(poly_dim(n), poly_dim(n)); }

  /// Trace values (2 x N) of all basis functions at parameter s of local edge e.
  Mat trace_matrix(int e, double s) const {
    Mat t = Mat::Zero(2, n_dofs());
    const Vec l = trace_lagrange(layout.edge_nodes, s);
    for (int j = 0; j <= k; ++j) {
      const int d = layout.trace_node_dof(e, j);
      t(0, d) += l[j];
      t(1, d + 1) += l[j];
    }
    return t;
  }

  Point edge_start(int e) const { return vertices[static_cast<std::size_t>(e)]; }
  Point edge_end(int e) const {
    return vertices[static_cast<std::size_t>((e + 1) % layout.n_vertices)];
  }
  Eigen::Vector2d outward_normal(int e) const {
    const Point t = (edge_end(e) - edge_start(e)).normalized();
    return {t.y(), -t.x()};
  }
};

namespace detail {

// Columns: grad m_a (a in M_{n+1}, |a| > 0) then m_perp m_b (b in M_{n-1}), in [P_n]^2.
inline Mat decomposition_matrix(int n, double h) {
  const int dn = poly_dim(n), dn1 = poly_dim(n + 1), dm = poly_dim(n - 1);
  Mat d = Mat::Zero(2 * dn, 2 * dn);
  d.leftCols(dn1 - 1) = grad_matrix(n + 1, h).rightCols(dn1 - 1);
  if (dm > 0) {
    d.block(0, dn1 - 1, dn, dm) = multiply_matrix(n - 1, {0, 1});
    d.block(dn, dn1 - 1, dn, dm) = -multiply_matrix(n - 1, {1, 0});
  }
  return d;
}

inline Mat block_diag2(const Mat& a) {
  Mat m = Mat::Zero(2 * a.rows(), 2 * a.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(a.rows(), a.cols()) = a;
  return m;
}

}  // namespace detail

/// Builds the local space on a CCW polygon. `integration_order` < 0 selects 2k+3.
inline LocalSpace compute_projectors(std::span<const Point> poly, int k,
                                     int integration_order = -1, int cell_id = -1) {
  LocalSpace E;
  E.k = k;
  E.layout = dof_layout(k, static_cast<int>(poly.size()));
  E.vertices.assign(poly.begin(), poly.end());
  E.geometry = compute_geometry(poly);
  const double h = E.geometry.diameter, area = E.geometry.area;
  const Point& xc = E.geometry.centroid;
  E.basis = ScaledMonomials(xc, h, k + 1);
  const int N = E.n_dofs();
  const int dk = poly_dim(k), dk1 = poly_dim(k + 1), dkm1 = poly_dim(k - 1);
  const std::string where = cell_id >= 0 ? " in cell " + std::to_string(cell_id) : "";

  const auto exact = polygon_quadrature(poly, xc, 2 * k + 2);
  E.gram = gram_matrix(E.basis, exact);
  E.rule = polygon_quadrature(poly, xc, integration_order < 0 ? 2 * k + 3 : integration_order);

  auto checked_lu = [&](const Mat& m, const char* what) {
    const double cond = condition_estimate(m);
    E.condition = std::max(E.condition, cond);
    if (!std::isfinite(cond) || cond > 1e14)
      throw NumericalError(std::string("singular local ") + what + " system" + where +
                           " (condition estimate " + std::to_string(cond) + ")");
    return m.partialPivLu();
  };

  // Boundary integrals: bnd[c][d](a, j) = int_dE m_a n_d (phi_j)_c, plain[c] without n_d.
  Mat bnd[2][2], plain[2];
  for (auto& r : bnd)
    for (auto& m : r) m = Mat::Zero(dk1, N);
  for (auto& m : plain) m = Mat::Zero(dk1, N);
  Vec mono_boundary = Vec::Zero(dk1);  // int_dE m_a
  const auto eg = gauss_legendre(k + 2);
  for (int e = 0; e < E.layout.n_vertices; ++e) {
    const Point a = E.edge_start(e), b = E.edge_end(e);
    const double len = (b - a).norm();
    const auto n = E.outward_normal(e);
    for (std::size_t q = 0; q < eg.size(); ++q) {
      const double s = eg.points[q], w = eg.weights[q] * len;
      const Vec mv = E.basis.values(a + s * (b - a));
      const Vec l = trace_lagrange(E.layout.edge_nodes, s);
      mono_boundary += w * mv;
      for (int j = 0; j <= k; ++j) {
        const int d0 = E.layout.trace_node_dof(e, j);
        for (int c = 0; c < 2; ++c) {
          plain[c].col(d0 + c) += w * l[j] * mv;
          for (int d = 0; d < 2; ++d) bnd[c][d].col(d0 + c) += w * l[j] * n[d] * mv;
        }
      }
    }
  }
  const Mat flux = bnd[0][0] + bnd[1][1];  // int_dE m_a phi.n

  // Divergence: moment 0 from the boundary flux, the rest are DoFs.
  E.div_moments = Mat::Zero(dkm1, N);
  E.div_moments.row(0) = flux.row(0);
  for (int a = 1; a < dkm1; ++a) E.div_moments(a, E.layout.divergence_dof(a)) = area / h;
  E.div_map = checked_lu(E.gram_block(k - 1), "Gram").solve(E.div_moments);

  const Mat gk2 = detail::block_diag2(E.gram_block(k));

  // int phi . w for vector polynomials w (columns of W, degree n <= k).
  auto moments = [&](const Mat& W, int n) -> Mat {
    const int dn1 = poly_dim(n + 1), dm = poly_dim(n - 1);
    const Mat coef = checked_lu(detail::decomposition_matrix(n, h), "decomposition").solve(W);
    Mat acoef = Mat::Zero(dn1, W.cols());
    acoef.bottomRows(dn1 - 1) = coef.topRows(dn1 - 1);
    const Mat bcoef = coef.bottomRows(dm);
    // int phi . grad a = -int a div(phi) + int_dE a phi.n
    Mat res = acoef.transpose() *
              (flux.topRows(dn1) - E.gram.block(0, 0, dn1, dkm1) * E.div_map);
    const auto idx = multi_indices(n - 1);
    for (int j = 0; j < dm; ++j) {
      if (idx[static_cast<std::size_t>(j)].degree() <= k - 3) {
        res.col(E.layout.interior_dof(j)) += area * bcoef.row(j).transpose();
      } else {
        if (E.pi_nabla.size() == 0)
          throw NumericalError("internal: H1 projection needed before it was built");
        Vec w = Vec::Zero(2 * dk);
        const MultiIndex b = idx[static_cast<std::size_t>(j)];
        w[monomial_index({b.a1, b.a2 + 1})] = 1.0;
        w[dk + monomial_index({b.a1 + 1, b.a2})] = -1.0;
        const Vec row = (w.transpose() * gk2 * E.pi_nabla).transpose();
        res += bcoef.row(j).transpose() * row.transpose();
      }
    }
    return res;
  };

  // H1 projection, componentwise.
  {
    const Mat grad = grad_matrix(k, h);
    const Mat stiff = grad.transpose() * detail::block_diag2(E.gram_block(k - 1)) * grad;
    const Mat lap = laplacian_matrix(k, h);
    const Mat dx = derivative_matrix(k, 0, h), dy = derivative_matrix(k, 1, h);
    const int dl = poly_dim(k - 2);
    Mat K = Mat::Zero(2 * dk, 2 * dk), R = Mat::Zero(2 * dk, N);
    for (int c = 0; c < 2; ++c) {
      K.block(c * dk, c * dk, dk, dk) = stiff;
      K.block(c * dk, c * dk, 1, dk) = mono_boundary.head(dk).transpose();
      R.row(c * dk) = plain[c].row(0);
      Mat W = Mat::Zero(2 * dl, dk - 1);
      W.block(c * dl, 0, dl, dk - 1) = lap.rightCols(dk - 1);
      const Mat vol = moments(W, k - 2);
      for (int a = 1; a < dk; ++a) {
        const Vec bx = dx.col(a), by = dy.col(a);
        R.row(c * dk + a) = -vol.row(a - 1) + bx.transpose() * bnd[c][0].topRows(dkm1) +
                            by.transpose() * bnd[c][1].topRows(dkm1);
      }
    }
    E.pi_nabla = checked_lu(K, "H1 projection").solve(R);
  }

  // L2 projection onto [P_k]^2.
  E.pi_zero = checked_lu(gk2, "mass").solve(moments(Mat::Identity(2 * dk, 2 * dk), k));

  // L2 projection of the gradient, block (i, j) = d_j v_i.
  {
    const int dl = poly_dim(k - 2);
    E.pi_grad = Mat::Zero(4 * dkm1, N);
    const auto glu = checked_lu(E.gram_block(k - 1), "Gram");
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Mat W = Mat::Zero(2 * dl, dkm1);
        W.block(i * dl, 0, dl, dkm1) = derivative_matrix(k - 1, j, h);
        const Mat rhs = -moments(W, k - 2) + bnd[i][j].topRows(dkm1);
        E.pi_grad.middleRows((2 * i + j) * dkm1, dkm1) = glu.solve(rhs);
      }
    E.pi_eps = symmetrize_matrix(dkm1) * E.pi_grad;
  }

  // DoFs of the vector monomials m_a e_c.
  E.poly_dofs = Mat::Zero(N, 2 * dk);
  {
    for (int v = 0; v < E.layout.n_vertices; ++v) {
      const Vec mv = E.basis.values(E.vertices[static_cast<std::size_t>(v)], k);
      for (int c = 0; c < 2; ++c) E.poly_dofs.block(E.layout.vertex_dof(v, c), c * dk, 1, dk) = mv.transpose();
    }
    for (int e = 0; e < E.layout.n_vertices; ++e)
      for (int j = 0; j < k - 1; ++j) {
        const double s = E.layout.edge_nodes[static_cast<std::size_t>(j)];
        const Vec mv = E.basis.values(E.edge_start(e) + s * (E.edge_end(e) - E.edge_start(e)), k);
        for (int c = 0; c < 2; ++c)
          E.poly_dofs.block(E.layout.edge_dof(e, j, c), c * dk, 1, dk) = mv.transpose();
      }
    const auto idx3 = multi_indices(k - 3);
    for (std::size_t b = 0; b < idx3.size(); ++b) {
      const int row = E.layout.interior_dof(static_cast<int>(b));
      const int i0 = monomial_index({idx3[b].a1, idx3[b].a2 + 1});
      const int i1 = monomial_index({idx3[b].a1 + 1, idx3[b].a2});
      E.poly_dofs.block(row, 0, 1, dk) = E.gram.block(i0, 0, 1, dk) / area;
      E.poly_dofs.block(row, dk, 1, dk) = -E.gram.block(i1, 0, 1, dk) / area;
    }
    const Mat dx = derivative_matrix(k, 0, h), dy = derivative_matrix(k, 1, h);
    const Mat gkm1 = E.gram_block(k - 1);
    for (int a = 1; a < dkm1; ++a) {
      const int row = E.layout.divergence_dof(a);
      E.poly_dofs.block(row, 0, 1, dk) = (h / area) * gkm1.row(a) * dx;
      E.poly_dofs.block(row, dk, 1, dk) = (h / area) * gkm1.row(a) * dy;
    }
  }
  E.projector_dofs = E.poly_dofs * E.pi_zero;
  return E;
}

/// DoF vector of a vector polynomial given by coefficients of degree <= k (2 dim(n) entries).
inline Vec dofs_of_polynomial(const LocalSpace& E, const Vec& coeffs) {
  const int dk = poly_dim(E.k);
  const int dn = static_cast<int>(coeffs.size() / 2);
  if (dn > dk || 2 * dn != coeffs.size())
    throw ConfigError("polynomial degree exceeds the space degree");
  Vec full = Vec::Zero(2 * dk);
  full.segment(0, dn) = coeffs.segment(0, dn);
  full.segment(dk, dn) = coeffs.segment(dn, dn);
  return E.poly_dofs * full;
}

/// Interpolant with vertex values, edge moments converted to edge-node values, and
/// interior/divergence moments by quadrature. Without `div_v` the divergence is
/// approximated by central differences.
inline Vec interpolate(const LocalSpace& E, const VectorField& v,
                       const ScalarField& div_v = nullptr) {
  const int k = E.k;
  Vec dofs = Vec::Zero(E.n_dofs());
  for (int i = 0; i < E.layout.n_vertices; ++i) {
    const auto val = v(E.vertices[static_cast<std::size_t>(i)]);
    dofs[E.layout.vertex_dof(i, 0)] = val.x();
    dofs[E.layout.vertex_dof(i, 1)] = val.y();
  }
  for (int e = 0; e < E.layout.n_vertices; ++e) {
    const auto vals = edge_trace_interpolant(E.edge_start(e), E.edge_end(e), v, k, E.layout.edge_nodes);
    for (int j = 0; j < k - 1; ++j)
      for (int c = 0; c < 2; ++c) dofs[E.layout.edge_dof(e, j, c)] = vals(j, c);
  }
  const double h = E.h(), area = E.area();
  const double fd = 1e-6 * h;
  auto div = [&](const Point& x) {
    if (div_v) return div_v(x);
    return (v(x + Point(fd, 0)).x() - v(x - Point(fd, 0)).x() + v(x + Point(0, fd)).y() -
            v(x - Point(0, fd)).y()) /
           (2 * fd);
  };
  const int n3 = E.layout.n_interior_dofs(), n4 = E.layout.n_divergence_dofs();
  for (std::size_t q = 0; q < E.rule.size(); ++q) {
    const Point& x = E.rule.points[q];
    const double w = E.rule.weights[q];
    const Vec mv = E.basis.values(x, k - 1);
    if (n3 > 0) {
      const Eigen::Vector2d val = v(x);
      const Eigen::Vector2d mperp((x.y() - E.basis.center().y()) / h,
                                  -(x.x() - E.basis.center().x()) / h);
      const double vm = val.dot(mperp);
      for (int b = 0; b < n3; ++b) dofs[E.layout.interior_dof(b)] += w * vm * mv[b] / area;
    }
    if (n4 > 0) {
      const double d = div(x);
      for (int a = 1; a <= n4; ++a) dofs[E.layout.divergence_dof(a)] += w * d * mv[a] * h / area;
    }
  }
  return dofs;
}

// ---- global numbering -----------------------------------------------------------------

/// Velocity numbering: [vertex dofs | edge-node dofs | cell interior+divergence dofs].
/// Edge nodes are numbered along the canonical direction (low -> high vertex index).
/// Pressure: dim(k-1) scaled-monomial coefficients per cell.
struct GlobalDofMap {
  int k = 2;
  int n_velocity = 0;
  int n_pressure = 0;
  int pressure_block = 0;
  std::vector<std::vector<int>> cell_dofs;
  std::vector<char> dirichlet;
  std::vector<int> free_index;  // velocity dof -> free numbering, -1 if Dirichlet
  int n_free = 0;
  bool mean_constraint = false;

  int pressure_offset(std::size_t cell) const { return static_cast<int>(cell) * pressure_block; }
  int n_dirichlet() const { return n_velocity - n_free; }
};

inline GlobalDofMap build_global_map(const PolygonalMesh& mesh, int k) {
  if (k < 2) throw ConfigError("velocity degree k must be at least 2");
  GlobalDofMap map;
  map.k = k;
  const int nv = static_cast<int>(mesh.n_vertices());
  const int ne = static_cast<int>(mesh.n_edges());
  const int per_edge = 2 * (k - 1);
  const int per_cell = poly_dim(k - 3) + poly_dim(k - 1) - 1;
  const int edge_base = 2 * nv, cell_base = edge_base + per_edge * ne;
  map.n_velocity = cell_base + per_cell * static_cast<int>(mesh.n_cells());
  map.pressure_block = poly_dim(k - 1);
  map.n_pressure = map.pressure_block * static_cast<int>(mesh.n_cells());
  map.dirichlet.assign(static_cast<std::size_t>(map.n_velocity), 0);

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells()[c];
    const int n = static_cast<int>(cell.size());
    const auto layout = dof_layout(k, n);
    std::vector<int> dofs(static_cast<std::size_t>(layout.size()));
    for (int i = 0; i < n; ++i)
      for (int comp = 0; comp < 2; ++comp)
        dofs[static_cast<std::size_t>(layout.vertex_dof(i, comp))] = 2 * cell[static_cast<std::size_t>(i)] + comp;
    for (int e = 0; e < n; ++e) {
      const int gid = mesh.cell_edges()[c][static_cast<std::size_t>(e)];
      const bool forward = cell[static_cast<std::size_t>(e)] < cell[static_cast<std::size_t>((e + 1) % n)];
      for (int j = 0; j < k - 1; ++j) {
        const int gj = forward ? j : k - 2 - j;
        for (int comp = 0; comp < 2; ++comp)
          dofs[static_cast<std::size_t>(layout.edge_dof(e, j, comp))] = edge_base + per_edge * gid + 2 * gj + comp;
      }
    }
    const int first = layout.n_vertex_dofs() + layout.n_edge_dofs();
    for (int i = 0; i < per_cell; ++i)
      dofs[static_cast<std::size_t>(first + i)] = cell_base + per_cell * static_cast<int>(c) + i;
    map.cell_dofs.push_back(std::move(dofs));
  }

  for (std::size_t id = 0; id < mesh.edges().size(); ++id) {
    const auto& e = mesh.edges()[id];
    if (e.marker != BoundaryMarker::dirichlet) continue;
    for (int v : e.vertices) {
      map.dirichlet[static_cast<std::size_t>(2 * v)] = 1;
      map.dirichlet[static_cast<std::size_t>(2 * v + 1)] = 1;
    }
    for (int i = 0; i < per_edge; ++i)
      map.dirichlet[static_cast<std::size_t>(edge_base + per_edge * static_cast<int>(id) + i)] = 1;
  }
  map.free_index.assign(static_cast<std::size_t>(map.n_velocity), -1);
  for (int i = 0; i < map.n_velocity; ++i)
    if (!map.dirichlet[static_cast<std::size_t>(i)]) map.free_index[static_cast<std::size_t>(i)] = map.n_free++;
  map.mean_constraint = !mesh.has_neumann();
  return map;
}

// ---- discretization bundle --------------------------------------------------------------

/// Runs fn(i) for i in [0, n) on `threads` workers; results must be written per index.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t t = static_cast<std::size_t>(threads);
  for (std::size_t w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Mesh + local spaces + global numbering.
struct Discretization {
  const PolygonalMesh* mesh = nullptr;
  int k = 2;
  int integration_order = 7;
  std::vector<LocalSpace> spaces;
  GlobalDofMap map;
  int threads = 1;

  Vec local_dofs(std::size_t cell, const Vec& global) const {
    const auto& d = map.cell_dofs[cell];
    Vec out(static_cast<long>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) out[static_cast<long>(i)] = global[d[i]];
    return out;
  }
  Vec local_pressure(std::size_t cell, const Vec& p) const {
    return p.segment(map.pressure_offset(cell), map.pressure_block);
  }
};

inline Discretization discretize(const PolygonalMesh& mesh, int k, int integration_order = -1,
                                 int threads = 1) {
  Discretization d;
  d.mesh = &mesh;
  d.k = k;
  d.integration_order = integration_order < 0 ? 2 * k + 3 : integration_order;
  d.threads = threads;
  d.map = build_global_map(mesh, k);
  d.spaces.resize(mesh.n_cells());
  parallel_for(mesh.n_cells(), threads, [&](std::size_t c) {
    d.spaces[c] = compute_projectors(mesh.cell_points(c), k, d.integration_order, static_cast<int>(c));
  });
  return d;
}

/// Global interpolant: vertex/edge DoFs are shared and agree between neighbours.
inline Vec interpolate_global(const Discretization& d, const VectorField& v,
                              const ScalarField& div_v = nullptr) {
  Vec u = Vec::Zero(d.map.n_velocity);
  for (std::size_t c = 0; c < d.spaces.size(); ++c) {
    const Vec loc = interpolate(d.spaces[c], v, div_v);
    const auto& dofs = d.map.cell_dofs[c];
    for (std::size_t i = 0; i < dofs.size(); ++i) u[dofs[i]] = loc[static_cast<long>(i)];
  }
  return u;
}

}  // namespace vemflow
