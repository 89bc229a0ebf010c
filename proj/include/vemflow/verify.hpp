#pragma once

// Manufactured solutions, error norms, divergence diagnostics and convergence studies.

#include "vemflow/solve.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

namespace vemflow {

struct ManufacturedCase {
  std::string name;
  Box domain;
  CarreauYasuda law;
  VectorField u;
  TensorField grad_u;
  ScalarField p;
  VectorField f;
  BoundarySpec boundary = BoundarySpec::all_dirichlet();
  VectorField traction = [](const Point&) { return Eigen::Vector2d(0, 0); };

  ProblemData problem() const { return {law, f, u, traction}; }
  Tensor2 strain(const Point& x) const {
    const Tensor2 g = grad_u(x);
    return 0.5 * (g + g.transpose());
  }
  Tensor2 stress_exact(const Point& x) const { return stress(law, x, strain(x)); }
};

/// u = (sin(a x) cos(a y), -cos(a x) sin(a y)), p = -sin(a x) sin(a y) + 4/pi^2, a = pi/2,
/// on the unit square; mu = 1, alpha = 2.
inline ManufacturedCase make_test1(double r, double delta) {
  ManufacturedCase c;
  c.name = "test1";
  c.domain = {0.0, 1.0, 0.0, 1.0};
  c.law = make_law(r, delta, 2.0);
  constexpr double a = std::numbers::pi / 2;
  c.u = [](const Point& x) {
    return Eigen::Vector2d(std::sin(a * x.x()) * std::cos(a * x.y()), -std::cos(a * x.x()) * std::sin(a * x.y()));
  };
  c.grad_u = [](const Point& x) {
    const double g = a * std::cos(a * x.x()) * std::cos(a * x.y());
    const double s = a * std::sin(a * x.x()) * std::sin(a * x.y());
    Tensor2 t;
    t << g, -s, s, -g;
    return t;
  };
  c.p = [](const Point& x) {
    return -std::sin(a * x.x()) * std::sin(a * x.y()) + 4.0 / (std::numbers::pi * std::numbers::pi);
  };
  const double al = c.law.alpha;
  c.f = [r, delta, al](const Point& x) {
    // eps = diag(g, -g), sigma = diag(F(g), -F(g)), F(g) = (delta^al + 2^(al/2)|g|^al)^((r-2)/al) g
    const double cx = std::cos(a * x.x()), sx = std::sin(a * x.x());
    const double cy = std::cos(a * x.y()), sy = std::sin(a * x.y());
    const double g = a * cx * cy;
    const double gx = -a * a * sx * cy, gy = -a * a * cx * sy;
    const double m = std::pow(2.0, al / 2) * std::pow(std::abs(g), al);
    const double base = std::pow(delta, al) + m;
    const double dF = base == 0.0 ? 0.0 : std::pow(base, (r - 2) / al - 1) * (std::pow(delta, al) + (r - 1) * m);
    const Eigen::Vector2d grad_p(-a * cx * sy, -a * sx * cy);
    return Eigen::Vector2d(Eigen::Vector2d(-dF * gx, dF * gy) + grad_p);
  };
  return c;
}

/// Mean of |x|^gamma over (-1, 1)^2 by symmetry reduction to one octant.
inline double test2_pressure_mean(double gamma) {
  const auto g = gauss_legendre(40);
  const double th = std::numbers::pi / 4;
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * th * std::pow(std::cos(th * g.points[i]), -(gamma + 2));
  return 2.0 / (gamma + 2) * s;
}

/// u = |x|^s (y, -x), p = -|x|^gamma + c_gamma on (-1, 1)^2 with s = 0.01,
/// gamma = 2/r - 1 + 0.01; delta = 0, mu = 1, alpha = 1.
inline ManufacturedCase make_test2(double r) {
  ManufacturedCase c;
  c.name = "test2";
  c.domain = {-1.0, 1.0, -1.0, 1.0};
  c.law = make_law(r, 0.0, 1.0);
  constexpr double s = 0.01;
  const double gamma = 2.0 / r - 1.0 + 0.01;
  const double cg = test2_pressure_mean(gamma);
  c.u = [](const Point& x) {
    const double rho = x.norm();
    if (rho == 0.0) return Eigen::Vector2d(0, 0);
    return Eigen::Vector2d(Eigen::Vector2d(x.y(), -x.x()) * std::pow(rho, s));
  };
  c.grad_u = [](const Point& x) {
    const double rho = x.norm();
    if (rho == 0.0) return Tensor2(Tensor2::Zero());
    const Eigen::Vector2d xp(x.y(), -x.x());
    Tensor2 rot;
    rot << 0, 1, -1, 0;
    return Tensor2(s * std::pow(rho, s - 2) * xp * x.transpose() + std::pow(rho, s) * rot);
  };
  c.p = [gamma, cg](const Point& x) { return -std::pow(x.norm(), gamma) + cg; };
  c.f = [r, gamma](const Point& x) {
    const double rho = x.norm();
    if (rho == 0.0) return Eigen::Vector2d(0, 0);
    const double C = s * std::pow(s / std::sqrt(2.0), r - 2);
    const double t = s * (r - 1) - 2;
    const Eigen::Vector2d xp(x.y(), -x.x());
    return Eigen::Vector2d(-C * (t + 4) / 2 * std::pow(rho, t) * xp - gamma * std::pow(rho, gamma - 2) * x);
  };
  return c;
}

/// Divergence-free u in [P_k]^2 from a random stream function of degree k+1 and a
/// zero-mean p in P_{k-1}, on the unit square; r = 2, mu = 1.
inline ManufacturedCase make_patch_case(int k, std::uint64_t seed) {
  ManufacturedCase c;
  c.name = "patch";
  c.domain = {0.0, 1.0, 0.0, 1.0};
  c.law = make_law(2.0, 1.0, 2.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const ScaledMonomials b(Point(0.5, 0.5), 1.0, k + 1);
  Vec psi(poly_dim(k + 1)), pc(poly_dim(k - 1));
  for (auto& v : psi) v = U(rng);
  for (auto& v : pc) v = U(rng);
  // velocity (d_y psi, -d_x psi), coefficients in P_k
  Vec uc(2 * poly_dim(k));
  uc.head(poly_dim(k)) = derivative_matrix(k + 1, 1, 1.0) * psi;
  uc.tail(poly_dim(k)) = -derivative_matrix(k + 1, 0, 1.0) * psi;
  // zero mean of p over the unit square
  const std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto rule = polygon_quadrature(sq, 2 * k + 2);
  double mean = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) mean += rule.weights[q] * pc.dot(b.values(rule.points[q], k - 1));
  pc[0] -= mean;
  const Mat G = vector_grad_matrix(k, 1.0);
  const Vec gc = G * uc;
  // -div(eps(u)) = -lap(u)/2 for divergence-free u
  Vec lap(2 * poly_dim(k - 2));
  lap.head(poly_dim(k - 2)) = laplacian_matrix(k, 1.0) * uc.head(poly_dim(k));
  lap.tail(poly_dim(k - 2)) = laplacian_matrix(k, 1.0) * uc.tail(poly_dim(k));
  const Vec dp = grad_matrix(k - 1, 1.0) * pc;
  c.u = [b, uc, k](const Point& x) { return eval_vector(uc, b.values(x, k)); };
  c.grad_u = [b, gc, k](const Point& x) { return eval_tensor(gc, b.values(x, k - 1)); };
  c.p = [b, pc, k](const Point& x) { return pc.dot(b.values(x, k - 1)); };
  c.f = [b, lap, dp, k](const Point& x) {
    const Vec m = b.values(x, k - 2);
    return Eigen::Vector2d(-0.5 * eval_vector(lap, m) + eval_vector(dp, m));
  };
  return c;
}

/// Switches one side of the box (0: x = x0, 1: x = x1, 2: y = y0, 3: y = y1) to a traction
/// boundary with the exact traction (sigma - p I) n.
inline ManufacturedCase with_neumann_side(ManufacturedCase mc, int side) {
  if (side < 0 || side > 3) throw ConfigError("side must be 0..3");
  const Box b = mc.domain;
  const double where = side == 0 ? b.x0 : side == 1 ? b.x1 : side == 2 ? b.y0 : b.y1;
  const double tol = 1e-10 * std::max(b.x1 - b.x0, b.y1 - b.y0);
  mc.boundary.by_midpoint = [side, where, tol](const Point& m) {
    const double c = side < 2 ? m.x() : m.y();
    return std::abs(c - where) <= tol ? BoundaryMarker::neumann : BoundaryMarker::dirichlet;
  };
  const Eigen::Vector2d n = side == 0 ? Eigen::Vector2d(-1, 0)
                            : side == 1 ? Eigen::Vector2d(1, 0)
                            : side == 2 ? Eigen::Vector2d(0, -1)
                                        : Eigen::Vector2d(0, 1);
  const ManufacturedCase base = mc;
  mc.traction = [base, n](const Point& x) {
    return Eigen::Vector2d((base.stress_exact(x) - base.p(x) * Tensor2::Identity()) * n);
  };
  return mc;
}

// ---- error norms -------------------------------------------------------------------------

struct ErrorTriple {
  double u = 0.0;
  double p = 0.0;
  double sigma = 0.0;
};

/// Default rule for L^s error norms: |e|^s of a degree-k quantity needs about s(k+1)
/// exactness, so the integration order is raised by (ceil(s) - 2)(k+1), s = max(r, r').
inline int default_error_order(int integration_order, int k, double r) {
  const double s = std::max(r, r / (r - 1));
  return integration_order + std::max(0, static_cast<int>(std::ceil(s - 1e-12)) - 2) * (k + 1);
}

/// Relative errors ||grad u - Pi grad u_h||_{L^r}, ||p - p_h||_{L^r'} and
/// ||sigma(eps u) - sigma(Pi eps u_h)||_{L^r'} with a fan rule of the given order
/// (negative: default_error_order of the discretization's integration order).
inline ErrorTriple compute_errors(const Discretization& d, const ManufacturedCase& mc, const Vec& u_h,
                                  const Vec& p_h, int order = -1) {
  const double r = mc.law.r, rc = mc.law.conjugate();
  const int q_order = order < 0 ? default_error_order(d.integration_order, d.k, r) : order;
  const std::size_t nc = d.spaces.size();
  std::vector<std::array<double, 6>> acc(nc);
  parallel_for(nc, d.threads, [&](std::size_t c) {
    const auto& E = d.spaces[c];
    const auto rule = polygon_quadrature(E.vertices, E.geometry.centroid, q_order);
    const Vec ue = d.local_dofs(c, u_h);
    const Vec gc = E.pi_grad * ue, ec = E.pi_eps * ue;
    const Vec pe = d.local_pressure(c, p_h);
    std::array<double, 6> s{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point& x = rule.points[q];
      const double w = rule.weights[q];
      const Vec m = E.basis.values(x, E.k - 1);
      const Tensor2 ge = mc.grad_u(x);
      const Tensor2 gh = eval_tensor(gc, m);
      Tensor2 eh = eval_tensor(ec, m);
      eh = 0.5 * (eh + eh.transpose());
      const Tensor2 se = mc.stress_exact(x), sh = stress(mc.law, x, eh);
      const double pex = mc.p(x);
      s[0] += w * std::pow((ge - gh).norm(), r);
      s[1] += w * std::pow(ge.norm(), r);
      s[2] += w * std::pow(std::abs(pex - pe.dot(m)), rc);
      s[3] += w * std::pow(std::abs(pex), rc);
      s[4] += w * std::pow((se - sh).norm(), rc);
      s[5] += w * std::pow(se.norm(), rc);
    }
    acc[c] = s;
  });
  std::array<double, 6> t{};
  for (const auto& a : acc)
    for (int i = 0; i < 6; ++i) t[static_cast<std::size_t>(i)] += a[static_cast<std::size_t>(i)];
  auto ratio = [](double num, double den, double e) {
    return den > 0 ? std::pow(num, 1 / e) / std::pow(den, 1 / e) : std::pow(num, 1 / e);
  };
  return {ratio(t[0], t[1], r), ratio(t[2], t[3], rc), ratio(t[4], t[5], rc)};
}

inline double err_velocity(const Discretization& d, const ManufacturedCase& mc, const Vec& u_h, int order = -1) {
  return compute_errors(d, mc, u_h, Vec::Zero(d.map.n_pressure), order).u;
}

/// max |div u_h| over quadrature points divided by max |Pi grad u_h| over the same points.
struct DivergenceReport {
  double max_div = 0.0;
  double max_grad = 0.0;
  double ratio() const { return max_grad > 0 ? max_div / max_grad : max_div; }
};

inline DivergenceReport divergence_diagnostic(const Discretization& d, const Vec& u_h) {
  DivergenceReport rep;
  for (std::size_t c = 0; c < d.spaces.size(); ++c) {
    const auto& E = d.spaces[c];
    const Vec ue = d.local_dofs(c, u_h);
    const Vec dc = E.div_map * ue, gc = E.pi_grad * ue;
    for (std::size_t q = 0; q < E.rule.size(); ++q) {
      const Vec m = E.basis.values(E.rule.points[q], E.k - 1);
      rep.max_div = std::max(rep.max_div, std::abs(dc.dot(m)));
      rep.max_grad = std::max(rep.max_grad, eval_tensor(gc, m).norm());
    }
  }
  return rep;
}

// ---- studies -----------------------------------------------------------------------------

enum class MeshFamily { quadrilateral, triangular, file };

struct StudyConfig {
  MeshFamily family = MeshFamily::quadrilateral;
  std::vector<int> one_over_h{4, 8, 16, 32};
  int k = 2;
  double distortion = 0.2;
  std::uint64_t seed = 0;
  FixedPointConfig fixed_point;
  int integration_order = -1;  // -1: 2k+3
  int error_order = -1;        // -1: default_error_order
  int threads = 1;
};

/// n x n cells over the case domain with nominal spacing 1 / one_over_h.
inline PolygonalMesh make_case_mesh(const ManufacturedCase& mc, MeshFamily family, int one_over_h,
                                    double distortion, std::uint64_t seed) {
  const double width = mc.domain.x1 - mc.domain.x0;
  const int n = std::max(1, static_cast<int>(std::lround(width * one_over_h)));
  if (family == MeshFamily::triangular) return generate_triangular(n, mc.domain, mc.boundary);
  if (family == MeshFamily::quadrilateral)
    return generate_quadrilateral_distorted(n, distortion, seed, mc.domain, mc.boundary);
  throw ConfigError("file meshes have no refinement family");
}

struct LevelReport {
  int one_over_h = 0;
  double h = 0.0;  // max cell diameter
  std::size_t n_cells = 0;
  int n_unknowns = 0;
  ErrorTriple errors;
  IterationLog log;
  DivergenceReport divergence;
  double seconds = 0.0;
};

struct StudyReport {
  std::string case_name;
  double r = 2.0;
  double delta = 0.0;
  std::vector<LevelReport> levels;
  ErrorTriple acr;
};

/// Mean over consecutive levels of log(e_i / e_{i+1}) / log(h_i / h_{i+1}) with h = 1/one_over_h.
inline double averaged_rate(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) s += std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1]);
  return s / static_cast<double>(h.size() - 1);
}

inline ErrorTriple averaged_rates(const std::vector<LevelReport>& levels) {
  std::vector<double> h, eu, ep, es;
  for (const auto& l : levels) {
    h.push_back(1.0 / l.one_over_h);
    eu.push_back(l.errors.u);
    ep.push_back(l.errors.p);
    es.push_back(l.errors.sigma);
  }
  return {averaged_rate(h, eu), averaged_rate(h, ep), averaged_rate(h, es)};
}

/// Solves and measures one mesh.
inline LevelReport run_level(const PolygonalMesh& mesh, const ManufacturedCase& mc, const StudyConfig& cfg,
                             int one_over_h) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = discretize(mesh, cfg.k, cfg.integration_order, cfg.threads);
  const auto sol = solve_nonnewtonian(d, mc.problem(), cfg.fixed_point);
  LevelReport rep;
  rep.one_over_h = one_over_h;
  rep.h = mesh.h();
  rep.n_cells = mesh.n_cells();
  rep.n_unknowns = d.map.n_free + d.map.n_pressure + (d.map.mean_constraint ? 1 : 0);
  rep.errors = compute_errors(d, mc, sol.u, sol.p, cfg.error_order);
  rep.log = sol.log;
  rep.divergence = divergence_diagnostic(d, sol.u);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// `on_level` is called after each level, so partial results survive a later failure.
inline StudyReport convergence_study(const ManufacturedCase& mc, const StudyConfig& cfg,
                                     const std::function<void(const StudyReport&)>& on_level = nullptr) {
  if (cfg.one_over_h.size() < 2) throw ConfigError("a convergence study needs at least two levels");
  StudyReport rep;
  rep.case_name = mc.name;
  rep.r = mc.law.r;
  rep.delta = mc.law.delta;
  for (int n : cfg.one_over_h) {
    const auto mesh = make_case_mesh(mc, cfg.family, n, cfg.distortion, cfg.seed);
    rep.levels.push_back(run_level(mesh, mc, cfg, n));
    if (rep.levels.size() >= 2) rep.acr = averaged_rates(rep.levels);
    if (on_level) on_level(rep);
  }
  return rep;
}

// ---- output ------------------------------------------------------------------------------

inline std::string format_sig5(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

inline void write_study_csv(const StudyReport& rep, std::ostream& out) {
  out << "one_over_h,err_u,err_p,err_sigma,iters_stage1,iters_stage2\n";
  for (const auto& l : rep.levels)
    out << l.one_over_h << ',' << format_sig5(l.errors.u) << ',' << format_sig5(l.errors.p) << ','
        << format_sig5(l.errors.sigma) << ',' << l.log.stage1.iterations << ',' << l.log.stage2.iterations << '\n';
}

inline nlohmann::json study_json(const StudyReport& rep) {
  nlohmann::json j;
  j["case"] = rep.case_name;
  j["r"] = rep.r;
  j["delta"] = rep.delta;
  auto sig = [](double v) { return std::stod(format_sig5(v)); };
  j["acr"] = {{"err_u", sig(rep.acr.u)}, {"err_p", sig(rep.acr.p)}, {"err_sigma", sig(rep.acr.sigma)}};
  j["levels"] = nlohmann::json::array();
  for (const auto& l : rep.levels)
    j["levels"].push_back({{"one_over_h", l.one_over_h},
                           {"h_max", sig(l.h)},
                           {"cells", l.n_cells},
                           {"unknowns", l.n_unknowns},
                           {"err_u", sig(l.errors.u)},
                           {"err_p", sig(l.errors.p)},
                           {"err_sigma", sig(l.errors.sigma)},
                           {"iterations", l.log.summary()},
                           {"div_ratio", sig(l.divergence.ratio())},
                           {"warnings", l.log.warnings}});
  return j;
}

}  // namespace vemflow
