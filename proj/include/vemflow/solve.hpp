#pragma once

// Linear saddle-point solves and the two-stage Picard iteration:
// Stokes, then the law with r_bar = (r + 2) / 2, then the law with r.

#include "vemflow/assembly.hpp"

#include <Eigen/SparseLU>
#ifdef VEMFLOW_WITH_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <cstdio>
#include <sstream>

namespace vemflow {

struct LinearSolution {
  Vec u;                    // all velocity DoFs, Dirichlet values included
  Vec p;                    // pressure coefficients
  double multiplier = 0.0;  // mean-pressure Lagrange multiplier
  double residual = 0.0;    // relative residual of the reduced system
};

namespace detail {

inline std::string describe_unknown(const GlobalDofMap& map, long idx) {
  if (idx < map.n_free) {
    for (int i = 0; i < map.n_velocity; ++i)
      if (map.free_index[static_cast<std::size_t>(i)] == idx) return "velocity DoF " + std::to_string(i);
  }
  if (idx < map.n_free + map.n_pressure)
    return "pressure coefficient " + std::to_string(idx - map.n_free);
  return "mean-pressure multiplier";
}

}  // namespace detail

/// Reduced saddle-point system on free velocity DoFs and pressures, with the Dirichlet
/// lifting moved to the right-hand side. When the pressure is only fixed up to a constant,
/// the constant coefficient of cell 0 is pinned to zero; the solver then shifts p to zero
/// mean. This is the same solution as bordering with the mean row, without a dense row
/// that would wreck the fill-reducing ordering.
struct ReducedSystem {
  SpMat matrix;
  Vec rhs;
  int n_free = 0;
  int n_pressure = 0;
  int pinned = -1;  // row of the pinned pressure unknown, -1 if none
};

inline ReducedSystem reduce_system(const GlobalDofMap& map, const AssembledSystem& sys) {
  ReducedSystem red;
  const int nf = map.n_free, np = map.n_pressure;
  const int n = nf + np;
  red.n_free = nf;
  red.n_pressure = np;
  red.pinned = sys.mean.size() > 0 ? nf : -1;
  Triplets t;
  t.reserve(static_cast<std::size_t>(sys.A.nonZeros() + 2 * sys.B.nonZeros() + 1));
  Vec rhs = Vec::Zero(n);
  const auto& fi = map.free_index;
  for (int i = 0; i < map.n_velocity; ++i)
    if (fi[static_cast<std::size_t>(i)] >= 0) rhs[fi[static_cast<std::size_t>(i)]] = sys.rhs[i];
  for (int col = 0; col < sys.A.outerSize(); ++col)
    for (SpMat::InnerIterator it(sys.A, col); it; ++it) {
      const int i = fi[static_cast<std::size_t>(it.row())], j = fi[static_cast<std::size_t>(it.col())];
      if (i < 0) continue;
      if (j >= 0)
        t.emplace_back(i, j, it.value());
      else
        rhs[i] -= it.value() * sys.dirichlet[it.col()];
    }
  for (int col = 0; col < sys.B.outerSize(); ++col)
    for (SpMat::InnerIterator it(sys.B, col); it; ++it) {
      const int j = fi[static_cast<std::size_t>(it.col())];
      const int row = nf + static_cast<int>(it.row());
      if (row == red.pinned) continue;
      if (j >= 0) {
        t.emplace_back(row, j, it.value());
        t.emplace_back(j, row, it.value());
      } else {
        rhs[row] -= it.value() * sys.dirichlet[it.col()];
      }
    }
  if (red.pinned >= 0) {
    t.emplace_back(red.pinned, red.pinned, 1.0);
    rhs[red.pinned] = 0.0;
  }
  red.matrix.resize(n, n);
  red.matrix.setFromTriplets(t.begin(), t.end());
  red.matrix.makeCompressed();
  red.rhs = std::move(rhs);
  return red;
}

namespace detail {

template <class Solver>
Vec factor_and_solve(Solver& lu, const SpMat& M, const Vec& rhs, const GlobalDofMap& map, double target,
                     double& residual) {
  lu.compute(M);
  if (lu.info() != Eigen::Success) {
    std::string msg = "factorization failed";
    if constexpr (requires { lu.lastErrorMessage(); }) {
      msg = lu.lastErrorMessage();
      const auto pos = msg.find_last_of(' ');
      if (pos != std::string::npos) {
        try {
          msg += " (" + describe_unknown(map, std::stol(msg.substr(pos + 1))) + ")";
        } catch (...) {
        }
      }
    }
    throw NumericalError("singular saddle-point system: " + msg);
  }
  Vec x = lu.solve(rhs);
  const double bn = rhs.norm() > 0 ? rhs.norm() : 1.0;
  residual = (M * x - rhs).norm() / bn;
  // refinement keeps the continuity rows, and so div u_h, at round-off level
  for (int it = 0; it < 3; ++it) {
    const Vec r = rhs - M * x;
    const Vec dx = lu.solve(r);
    const Vec cand = x + dx;
    const double res = (M * cand - rhs).norm() / bn;
    if (!(res < residual)) break;
    const bool small_gain = res > 0.5 * residual && residual <= target;
    x = cand;
    residual = res;
    if (small_gain) break;
  }
  if (!(residual <= 1e-6))
    throw NumericalError("singular saddle-point system: relative residual " + std::to_string(residual) +
                         " after refinement");
  return x;
}

}  // namespace detail

/// Solves the reduced system with a sparse direct LU factorization (UMFPACK when the
/// library was built with it, Eigen's SparseLU otherwise) plus iterative refinement.
inline LinearSolution solve_linear(const GlobalDofMap& map, const AssembledSystem& sys,
                                   double target = 1e-10) {
  const ReducedSystem red = reduce_system(map, sys);
  double residual = 0.0;
#ifdef VEMFLOW_WITH_UMFPACK
  Eigen::UmfPackLU<SpMat> lu;
#else
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
#endif
  const Vec x = detail::factor_and_solve(lu, red.matrix, red.rhs, map, target, residual);
  if (!x.allFinite()) throw NumericalError("non-finite solution of the saddle-point system");

  const int nf = red.n_free, np = red.n_pressure;
  const auto& fi = map.free_index;
  LinearSolution s;
  s.u = sys.dirichlet;
  for (int i = 0; i < map.n_velocity; ++i)
    if (fi[static_cast<std::size_t>(i)] >= 0) s.u[i] = x[fi[static_cast<std::size_t>(i)]];
  s.p = x.segment(nf, np);
  if (red.pinned >= 0) {
    // shift by a constant to zero mean; constants are the first coefficient of every cell
    double area = 0.0;
    for (int c = 0; c < np; c += map.pressure_block) area += sys.mean[c];
    const double shift = sys.mean.dot(s.p) / area;
    for (int c = 0; c < np; c += map.pressure_block) s.p[c] -= shift;
    // multiplier of the bordered formulation, from the dropped continuity row
    const Vec cont = sys.B * s.u;
    s.multiplier = -cont[0] / sys.mean[0];
  }
  s.residual = residual;
  return s;
}

struct FixedPointConfig {
  double tol = 1e-8;
  int max_iter = 200;
  double linear_tol = 1e-10;
  StabilizationKind stab = StabilizationKind::s1;

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("fixed-point tolerance must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  }
};

struct StageLog {
  double r_eff = 2.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> increments;
  double residual = 0.0;        // nonlinear momentum residual at exit, relative to the load
  double linear_residual = 0.0; // worst linear solve residual in the stage
  int capped_points = 0;        // floored viscosity points in the last assembly
};

struct IterationLog {
  StageLog stokes, stage1, stage2;
  std::vector<std::string> warnings;

  /// "N1|N2" with N2 zero-padded to two digits.
  std::string summary() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%d|%02d", stage1.iterations, stage2.iterations);
    return buf;
  }
};

struct FlowSolution {
  Vec u;
  Vec p;
  double multiplier = 0.0;
  IterationLog log;
};

namespace detail {

inline double relative_increment(const Vec& next, const Vec& prev) {
  const double denom = std::max(next.lpNorm<Eigen::Infinity>(), std::numeric_limits<double>::epsilon());
  return (next - prev).lpNorm<Eigen::Infinity>() / denom;
}

inline double relative_momentum_residual(const Discretization& d, const ProblemData& data, double r,
                                         StabilizationKind stab, const Vec& u, const Vec& p,
                                         const Vec& load) {
  const auto res = nonlinear_residual(d, data, r, stab, u, p, load);
  Vec free_load = load;
  for (int i = 0; i < d.map.n_velocity; ++i)
    if (d.map.dirichlet[static_cast<std::size_t>(i)]) free_load[i] = 0.0;
  const double scale = std::max(free_load.lpNorm<Eigen::Infinity>(), 1e-300);
  return res.momentum.lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace detail

/// Picard iteration at exponent r_eff starting from `initial`.
inline std::pair<LinearSolution, StageLog> fixed_point_stage(const Discretization& d, const ProblemData& data,
                                                             double r_eff, const LinearSolution& initial,
                                                             const FixedPointConfig& cfg, const Vec& load,
                                                             const Vec& dirichlet) {
  cfg.validate();
  StageLog log;
  log.r_eff = r_eff;
  LinearSolution cur = initial;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto sys = assemble(d, data, r_eff, &cur.u, cfg.stab, load, dirichlet);
    LinearSolution next = solve_linear(d.map, sys, cfg.linear_tol);
    if (!next.u.allFinite() || !next.p.allFinite())
      throw NumericalError("non-finite iterate at r = " + std::to_string(r_eff) + ", iteration " + std::to_string(it));
    const double inc = detail::relative_increment(next.u, cur.u);
    log.increments.push_back(inc);
    log.iterations = it;
    log.linear_residual = std::max(log.linear_residual, next.residual);
    log.capped_points = sys.capped_points;
    cur = std::move(next);
    if (inc <= cfg.tol) {
      log.converged = true;
      break;
    }
  }
  log.residual = detail::relative_momentum_residual(d, data, r_eff, cfg.stab, cur.u, cur.p, load);
  return {cur, log};
}

/// Stokes solve, stage at r_bar = (r + 2) / 2, stage at r.
inline FlowSolution solve_nonnewtonian(const Discretization& d, const ProblemData& data,
                                       const FixedPointConfig& cfg) {
  data.law.validate();
  cfg.validate();
  const Vec load = assemble_load(d, data);
  const Vec g = dirichlet_values(d, data.dirichlet);
  FlowSolution out;

  const auto stokes_sys = assemble(d, data, 2.0, nullptr, cfg.stab, load, g);
  const LinearSolution stokes = solve_linear(d.map, stokes_sys, cfg.linear_tol);
  out.log.stokes.iterations = 1;
  out.log.stokes.converged = true;
  out.log.stokes.linear_residual = stokes.residual;

  const double r = data.law.r;
  const double rbar = 0.5 * (r + 2.0);
  auto [s1, log1] = fixed_point_stage(d, data, rbar, stokes, cfg, load, g);
  auto [s2, log2] = fixed_point_stage(d, data, r, s1, cfg, load, g);
  out.log.stage1 = log1;
  out.log.stage2 = log2;
  for (const auto* st : {&log1, &log2}) {
    if (!st->converged)
      out.log.warnings.push_back("stage r = " + std::to_string(st->r_eff) + " hit max_iter without converging");
    if (st->linear_residual > cfg.linear_tol)
      out.log.warnings.push_back("linear residual " + std::to_string(st->linear_residual) + " above target");
    const auto& inc = st->increments;
    if (inc.size() >= 3 && inc.back() > inc[inc.size() - 2] && inc[inc.size() - 2] > inc[inc.size() - 3])
      out.log.warnings.push_back("increments grew over the last iterations at r = " + std::to_string(st->r_eff));
    if (st->capped_points > 0)
      out.log.warnings.push_back(std::to_string(st->capped_points) +
                                 " quadrature points used the zero-strain viscosity floor at r = " +
                                 std::to_string(st->r_eff));
  }
  out.u = std::move(s2.u);
  out.p = std::move(s2.p);
  out.multiplier = s2.multiplier;
  return out;
}

}  // namespace vemflow
