#pragma once

// Element and global assembly of the discrete forms.
//
//   a_h(u, v) = sum_E int_E sigma(x, Pi eps(u)) : Pi eps(v) + S_E((I - Pi0) u, (I - Pi0) v)
//   b(v, q)   = -int div(v) q
//   (f_h, v)  = int Pi0_k f . v  +  int_{Gamma_N} g . v
//
// The Picard step freezes the viscosity (and the stabilization coefficient) at the
// previous iterate, so every linear step is symmetric.

#include "vemflow/law.hpp"
#include "vemflow/space.hpp"

#include <Eigen/Sparse>

namespace vemflow {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

enum class StabilizationKind { s1, s2 };

inline const char* to_string(StabilizationKind s) { return s == StabilizationKind::s1 ? "s1" : "s2"; }

/// Body force, boundary velocity and boundary traction with the constitutive law.
struct ProblemData {
  CarreauYasuda law;
  VectorField force = [](const Point&) { return Eigen::Vector2d(0, 0); };
  VectorField dirichlet = [](const Point&) { return Eigen::Vector2d(0, 0); };
  VectorField traction = [](const Point&) { return Eigen::Vector2d(0, 0); };
};

// ---- element level ---------------------------------------------------------------------

/// Values of Pi eps(phi_j) at x as a 4 x N matrix (rows T00, T01, T10, T11).
inline Mat eps_at(const LocalSpace& E, const Point& x) {
  const Vec m = E.basis.values(x, E.k - 1);
  const long l = m.size();
  Mat out(4, E.n_dofs());
  for (int t = 0; t < 4; ++t) out.row(t) = m.transpose() * E.pi_eps.middleRows(t * l, l);
  return out;
}

inline Tensor2 to_tensor(const Eigen::Vector4d& v) {
  Tensor2 t;
  t << v[0], v[1], v[2], v[3];
  return t;
}

/// b(phi_i, q_a) = -int div(phi_i) m_a, as an N x dim(k-1) matrix.
inline Mat element_b(const LocalSpace& E) { return -E.div_moments.transpose(); }

/// Frozen-coefficient viscous matrix sum_q w nu(x_q, Pi eps(prev)) Pi eps(phi_i) : Pi eps(phi_j).
/// Without `prev` the coefficient is mu (Stokes). `capped` counts floored points.
inline Mat element_viscous_linearized(const LocalSpace& E, const CarreauYasuda& law, double r_eff,
                                      const Vec* prev, int* capped = nullptr) {
  const int n = E.n_dofs();
  Mat K = Mat::Zero(n, n);
  for (std::size_t q = 0; q < E.rule.size(); ++q) {
    const Point& x = E.rule.points[q];
    const Mat eps = eps_at(E, x);
    double nu = law.mu(x);
    if (prev && r_eff != 2.0) {
      const Tensor2 z = to_tensor(eps * *prev);
      nu = viscosity(law, r_eff, x, z);
      if (capped && viscosity_capped(law, z)) ++*capped;
    }
    K.noalias() += (E.rule.weights[q] * nu) * eps.transpose() * eps;
  }
  return 0.5 * (K + K.transpose());
}

/// Cell mean of mu.
inline double mean_viscosity(const LocalSpace& E, const CarreauYasuda& law) {
  double s = 0.0;
  for (std::size_t q = 0; q < E.rule.size(); ++q) s += E.rule.weights[q] * law.mu(E.rule.points[q]);
  return s / E.area();
}

/// DoFs of (I - Pi0_k) v.
inline Vec tilde_dofs(const LocalSpace& E, const Vec& v) { return v - E.projector_dofs * v; }

/// Stabilization weights evaluated at `u` (already the full DoF vector, not the tilde part).
/// S1: one scalar for all DoFs from the Euclidean norm of the tilde DoFs; S2: per DoF.
/// Without `u` (or r_eff = 2) every weight is mean(mu).
inline Vec stabilization_weights(const LocalSpace& E, const CarreauYasuda& law, StabilizationKind kind,
                                 double r_eff, const Vec* u) {
  const int n = E.n_dofs();
  const double mbar = mean_viscosity(E, law);
  if (!u || r_eff == 2.0) return Vec::Constant(n, mbar);
  const double a = law.alpha, h = E.h();
  const double floor = std::pow(kViscosityFloor, a);
  auto coef = [&](double dof_norm) {
    const double base = std::pow(law.delta, a) + std::pow(dof_norm / h, a);
    return mbar * std::pow(std::max(base, floor), (r_eff - 2.0) / a);
  };
  const Vec t = tilde_dofs(E, *u);
  if (kind == StabilizationKind::s1) return Vec::Constant(n, coef(t.norm()));
  Vec w(n);
  for (int i = 0; i < n; ++i) w[i] = coef(std::abs(t[i]));
  return w;
}

/// (I - P)^T diag(w) (I - P) with P the DoFs of Pi0_k.
inline Mat element_stabilization(const LocalSpace& E, const Vec& weights) {
  const Mat ip = Mat::Identity(E.n_dofs(), E.n_dofs()) - E.projector_dofs;
  return ip.transpose() * weights.asDiagonal() * ip;
}

inline Mat element_stabilization(const LocalSpace& E, const CarreauYasuda& law, StabilizationKind kind,
                                 double r_eff, const Vec* prev) {
  return element_stabilization(E, stabilization_weights(E, law, kind, r_eff, prev));
}

/// Nonlinear stabilization S_E(u, phi_j) for all j.
inline Vec stabilization_action(const LocalSpace& E, const CarreauYasuda& law, StabilizationKind kind,
                                double r, const Vec& u) {
  const Vec w = stabilization_weights(E, law, kind, r, &u);
  const Mat ip = Mat::Identity(E.n_dofs(), E.n_dofs()) - E.projector_dofs;
  return ip.transpose() * (w.asDiagonal() * (ip * u));
}

/// Coefficients of Pi0_k f (vector layout) computed with the element rule.
inline Vec project_force(const LocalSpace& E, const VectorField& f) {
  const int dk = poly_dim(E.k);
  Vec rhs = Vec::Zero(2 * dk);
  for (std::size_t q = 0; q < E.rule.size(); ++q) {
    const Vec m = E.basis.values(E.rule.points[q], E.k);
    const Eigen::Vector2d fv = f(E.rule.points[q]);
    rhs.head(dk) += E.rule.weights[q] * fv.x() * m;
    rhs.tail(dk) += E.rule.weights[q] * fv.y() * m;
  }
  const Mat g = E.gram_block(E.k);
  const auto lu = g.partialPivLu();
  Vec c(2 * dk);
  c.head(dk) = lu.solve(rhs.head(dk));
  c.tail(dk) = lu.solve(rhs.tail(dk));
  return c;
}

/// int Pi0_k f . phi_j = (Pi0_k f, Pi0_k phi_j).
inline Vec element_rhs(const LocalSpace& E, const VectorField& f) {
  const Vec c = project_force(E, f);
  return E.pi_zero.transpose() * (detail::block_diag2(E.gram_block(E.k)) * c);
}

// ---- global level ----------------------------------------------------------------------

/// Boundary DoF values of the Dirichlet datum: vertex values and edge-node values of the
/// moment-preserving edge interpolant along the canonical edge direction.
inline Vec dirichlet_values(const Discretization& d, const VectorField& g) {
  const auto& mesh = *d.mesh;
  const int k = d.k;
  Vec out = Vec::Zero(d.map.n_velocity);
  const auto nodes = gauss_lobatto_interior(k);
  const int edge_base = 2 * static_cast<int>(mesh.n_vertices());
  const int per_edge = 2 * (k - 1);
  for (std::size_t id = 0; id < mesh.n_edges(); ++id) {
    const auto& e = mesh.edges()[id];
    if (e.marker != BoundaryMarker::dirichlet) continue;
    const Point& a = mesh.vertices()[static_cast<std::size_t>(e.vertices[0])];
    const Point& b = mesh.vertices()[static_cast<std::size_t>(e.vertices[1])];
    for (int v : e.vertices) {
      const auto val = g(mesh.vertices()[static_cast<std::size_t>(v)]);
      out[2 * v] = val.x();
      out[2 * v + 1] = val.y();
    }
    const auto vals = edge_trace_interpolant(a, b, g, k, nodes);
    for (int j = 0; j < k - 1; ++j)
      for (int c = 0; c < 2; ++c) out[edge_base + per_edge * static_cast<int>(id) + 2 * j + c] = vals(j, c);
  }
  return out;
}

/// int_{Gamma_N} g . phi_i by edge Gauss quadrature against the polynomial traces.
inline Vec neumann_rhs(const Discretization& d, const VectorField& g) {
  const auto& mesh = *d.mesh;
  const int k = d.k;
  Vec out = Vec::Zero(d.map.n_velocity);
  const auto nodes = gauss_lobatto_interior(k);
  const auto rule = gauss_legendre(std::max(k + 3, 8));
  const int edge_base = 2 * static_cast<int>(mesh.n_vertices());
  const int per_edge = 2 * (k - 1);
  for (std::size_t id = 0; id < mesh.n_edges(); ++id) {
    const auto& e = mesh.edges()[id];
    if (e.marker != BoundaryMarker::neumann) continue;
    const Point& a = mesh.vertices()[static_cast<std::size_t>(e.vertices[0])];
    const Point& b = mesh.vertices()[static_cast<std::size_t>(e.vertices[1])];
    const double len = (b - a).norm();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double s = rule.points[q], w = rule.weights[q] * len;
      const Vec l = trace_lagrange(nodes, s);
      const Eigen::Vector2d gv = g(a + s * (b - a));
      for (int j = 0; j <= k; ++j) {
        const int base = j == 0 ? 2 * e.vertices[0]
                         : j == k ? 2 * e.vertices[1]
                                  : edge_base + per_edge * static_cast<int>(id) + 2 * (j - 1);
        out[base] += w * l[j] * gv.x();
        out[base + 1] += w * l[j] * gv.y();
      }
    }
  }
  return out;
}

/// Velocity load: projected body force plus Neumann traction.
inline Vec assemble_load(const Discretization& d, const ProblemData& data) {
  std::vector<Vec> local(d.spaces.size());
  parallel_for(d.spaces.size(), d.threads, [&](std::size_t c) { local[c] = element_rhs(d.spaces[c], data.force); });
  Vec f = Vec::Zero(d.map.n_velocity);
  for (std::size_t c = 0; c < local.size(); ++c) {
    const auto& dofs = d.map.cell_dofs[c];
    for (std::size_t i = 0; i < dofs.size(); ++i) f[dofs[i]] += local[c][static_cast<long>(i)];
  }
  if (d.mesh->has_neumann()) f += neumann_rhs(d, data.traction);
  return f;
}

/// Full (unreduced) blocks; Dirichlet elimination and bordering happen in the solver.
struct AssembledSystem {
  SpMat A;                 // n_velocity x n_velocity
  SpMat B;                 // n_pressure x n_velocity, (B u)_q = b(u, q)
  Vec mean;                // n_pressure, int of each pressure basis function; empty without constraint
  Vec rhs;                 // n_velocity
  Vec dirichlet;           // n_velocity, prescribed values on Dirichlet DoFs
  int capped_points = 0;   // quadrature points where the viscosity floor was active
};

/// Divergence block and mean-pressure row; independent of the iterate.
inline void assemble_divergence(const Discretization& d, AssembledSystem& sys) {
  Triplets tb;
  const int pb = d.map.pressure_block;
  for (std::size_t c = 0; c < d.spaces.size(); ++c) {
    const Mat be = element_b(d.spaces[c]);
    const auto& dofs = d.map.cell_dofs[c];
    const int off = d.map.pressure_offset(c);
    for (int a = 0; a < pb; ++a)
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        const double v = be(static_cast<long>(i), a);
        if (v != 0.0) tb.emplace_back(off + a, dofs[i], v);
      }
  }
  sys.B.resize(d.map.n_pressure, d.map.n_velocity);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  sys.mean.resize(0);
  if (d.map.mean_constraint) {
    sys.mean = Vec::Zero(d.map.n_pressure);
    for (std::size_t c = 0; c < d.spaces.size(); ++c)
      sys.mean.segment(d.map.pressure_offset(c), pb) = d.spaces[c].gram.block(0, 0, pb, 1);
  }
}

/// Picard system at exponent r_eff, frozen at `prev` (full velocity vector) or Stokes if null.
inline AssembledSystem assemble(const Discretization& d, const ProblemData& data, double r_eff,
                                const Vec* prev, StabilizationKind stab, const Vec& load,
                                const Vec& dirichlet) {
  if (prev && prev->size() != d.map.n_velocity)
    throw ConfigError("previous iterate has " + std::to_string(prev->size()) + " entries, expected " +
                      std::to_string(d.map.n_velocity));
  AssembledSystem sys;
  const std::size_t nc = d.spaces.size();
  std::vector<Mat> local(nc);
  std::vector<int> capped(nc, 0);
  parallel_for(nc, d.threads, [&](std::size_t c) {
    const auto& E = d.spaces[c];
    Vec up;
    if (prev) up = d.local_dofs(c, *prev);
    local[c] = element_viscous_linearized(E, data.law, r_eff, prev ? &up : nullptr, &capped[c]) +
               element_stabilization(E, data.law, stab, r_eff, prev ? &up : nullptr);
  });
  Triplets ta;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& dofs = d.map.cell_dofs[c];
    const long n = static_cast<long>(dofs.size());
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) ta.emplace_back(dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)], local[c](i, j));
    sys.capped_points += capped[c];
  }
  sys.A.resize(d.map.n_velocity, d.map.n_velocity);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  assemble_divergence(d, sys);
  sys.rhs = load;
  sys.dirichlet = dirichlet;
  return sys;
}

/// Residual of the nonlinear discrete equations at (u, p): the momentum part on free
/// velocity DoFs (zero on Dirichlet DoFs) and the continuity part B u.
struct NonlinearResidual {
  Vec momentum;
  Vec continuity;
};

inline NonlinearResidual nonlinear_residual(const Discretization& d, const ProblemData& data, double r,
                                            StabilizationKind stab, const Vec& u, const Vec& p,
                                            const Vec& load) {
  CarreauYasuda law = data.law;
  law.r = r;
  const std::size_t nc = d.spaces.size();
  std::vector<Vec> local(nc);
  parallel_for(nc, d.threads, [&](std::size_t c) {
    const auto& E = d.spaces[c];
    const Vec ue = d.local_dofs(c, u);
    Vec res = stabilization_action(E, law, stab, r, ue);
    for (std::size_t q = 0; q < E.rule.size(); ++q) {
      const Point& x = E.rule.points[q];
      const Mat eps = eps_at(E, x);
      const Tensor2 e = to_tensor(eps * ue);
      // symmetrize to strip round-off before the symmetry check in stress()
      const Tensor2 s = stress(law, x, 0.5 * (e + e.transpose()));
      const Eigen::Vector4d sv(s(0, 0), s(0, 1), s(1, 0), s(1, 1));
      res.noalias() += E.rule.weights[q] * eps.transpose() * sv;
    }
    res += element_b(E) * d.local_pressure(c, p);
    local[c] = res;
  });
  NonlinearResidual out;
  out.momentum = -load;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& dofs = d.map.cell_dofs[c];
    for (std::size_t i = 0; i < dofs.size(); ++i) out.momentum[dofs[i]] += local[c][static_cast<long>(i)];
  }
  for (int i = 0; i < d.map.n_velocity; ++i)
    if (d.map.dirichlet[static_cast<std::size_t>(i)]) out.momentum[i] = 0.0;
  AssembledSystem tmp;
  assemble_divergence(d, tmp);
  out.continuity = tmp.B * u;
  return out;
}

}  // namespace vemflow
