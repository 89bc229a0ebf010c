#pragma once

// Property suites behind `vemflow check`: projector reproduction, stabilization
// equivalence, monotonicity and continuity, constitutive-law sampling, mesh regularity,
// patch tests and a discrete inf-sup proxy.

#include "vemflow/mesh_io.hpp"
#include "vemflow/verify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <optional>

namespace vemflow {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> details;
  std::vector<std::string> warnings;
};

struct CheckReport {
  std::vector<CheckResult> results;
  bool ok() const {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
  }
};

/// S^E(u, .) for all test DoFs; the suites call it instead of the library function
/// directly so that a deliberately broken form can be injected.
using StabilizationForm =
    std::function<Vec(const LocalSpace&, const CarreauYasuda&, StabilizationKind, double, const Vec&)>;

inline StabilizationForm library_stabilization() {
  return [](const LocalSpace& E, const CarreauYasuda& law, StabilizationKind kind, double r, const Vec& u) {
    return stabilization_action(E, law, kind, r, u);
  };
}

/// Flips the sign of the S1 coefficient.
inline StabilizationForm sign_flipped_s1(StabilizationForm base) {
  return [base](const LocalSpace& E, const CarreauYasuda& law, StabilizationKind kind, double r, const Vec& u) {
    const Vec v = base(E, law, kind, r, u);
    return kind == StabilizationKind::s1 ? Vec(-v) : v;
  };
}

struct CheckConfig {
  std::uint64_t seed = 0;
  int k = 2;
  std::vector<double> r_values{1.1, 1.25, 1.5, 1.75, 2.0};
  int n_polygons = 100;
  std::size_t law_samples = 10000;
  int stab_samples = 200;  // per refinement level and kind
  std::vector<int> sweep{4, 8, 16};
  double distortion = 0.2;
  double rho = 0.1;
  std::string voronoi_path;  // optional loaded mesh for regularity and patch suites
  StabilizationForm stabilization = library_stabilization();
};

namespace detail {

inline std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

/// Star-shaped random polygon with 3..8 vertices, radii in [0.4, 1] around a random center,
/// scaled by 10^U(-2, 1).
inline std::vector<Point> random_polygon(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nv(3, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = nv(rng);
  std::vector<double> ang(static_cast<std::size_t>(n));
  for (auto& a : ang) a = 2 * std::numbers::pi * u01(rng);
  std::sort(ang.begin(), ang.end());
  // reject angular gaps >= pi so the centre stays inside
  for (int i = 0; i < n; ++i) {
    const double next = i + 1 < n ? ang[static_cast<std::size_t>(i + 1)] : ang[0] + 2 * std::numbers::pi;
    if (next - ang[static_cast<std::size_t>(i)] >= 0.9 * std::numbers::pi) return random_polygon(rng);
  }
  const double scale = std::pow(10.0, -2.0 + 3.0 * u01(rng));
  const Point c(u01(rng) * 10 - 5, u01(rng) * 10 - 5);
  std::vector<Point> poly;
  for (double a : ang) {
    const double rad = 0.4 + 0.6 * u01(rng);
    poly.push_back(c + scale * rad * Point(std::cos(a), std::sin(a)));
  }
  if (!is_simple_polygon(poly)) return random_polygon(rng);
  return poly;
}

inline std::vector<PolygonalMesh> sweep_meshes(const CheckConfig& cfg) {
  std::vector<PolygonalMesh> out;
  for (int n : cfg.sweep) out.push_back(generate_quadrilateral_distorted(n, cfg.distortion, cfg.seed));
  return out;
}

// random DoF vector with zero polynomial part and log-uniform size
inline Vec random_tilde(const LocalSpace& E, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), lg(-3.0, 3.0);
  Vec v(E.n_dofs());
  for (auto& x : v) x = u(rng);
  v = tilde_dofs(E, v);
  return v / v.norm() * std::pow(10.0, lg(rng));
}

}  // namespace detail

/// Pi0_k, Pi_nabla and Pi0_{k-1} grad reproduce random [P_k]^2 fields on random polygons.
inline CheckResult check_projector_reproduction(const CheckConfig& cfg) {
  CheckResult res{"projector reproduction"};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < cfg.n_polygons; ++t) {
    const auto poly = detail::random_polygon(rng);
    const LocalSpace E = compute_projectors(poly, cfg.k);
    Vec c(2 * poly_dim(cfg.k));
    for (auto& x : c) x = u(rng);
    const Vec dofs = dofs_of_polynomial(E, c);
    const Mat G = vector_grad_matrix(cfg.k, E.h());
    const double err0 = (E.pi_zero * dofs - c).norm() / c.norm();
    const double errn = (E.pi_nabla * dofs - c).norm() / c.norm();
    const Vec gc = G * c;
    const double errg = gc.norm() > 0 ? (E.pi_grad * dofs - gc).norm() / gc.norm() : 0.0;
    worst = std::max({worst, err0, errn, errg});
  }
  res.passed = worst <= 1e-11;
  res.details.push_back(std::to_string(cfg.n_polygons) + " polygons, k = " + std::to_string(cfg.k) +
                        detail::fmt(", worst relative coefficient error %.3e", worst));
  return res;
}

/// S1(e, e) / S2(e, e) lies in [N^(r/2-1), 1] for every element across the sweep.
inline CheckResult check_stabilization_equivalence(const CheckConfig& cfg) {
  CheckResult res{"stabilization S1/S2 equivalence"};
  std::mt19937_64 rng(cfg.seed + 11);
  const auto meshes = detail::sweep_meshes(cfg);
  for (double r : cfg.r_values) {
    const auto law = make_law(r, 0.0, 2.0);
    std::string line = detail::fmt("r = %.2f:", r);
    for (std::size_t l = 0; l < meshes.size(); ++l) {
      const auto d = discretize(meshes[l], cfg.k);
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      bool ok = true;
      for (int s = 0; s < cfg.stab_samples; ++s) {
        const auto& E = d.spaces[static_cast<std::size_t>(s) % d.spaces.size()];
        const Vec e = detail::random_tilde(E, rng);
        const double s1 = e.dot(cfg.stabilization(E, law, StabilizationKind::s1, r, e));
        const double s2 = e.dot(cfg.stabilization(E, law, StabilizationKind::s2, r, e));
        const double ratio = s1 / s2;
        const double bound = std::pow(static_cast<double>(E.n_dofs()), r / 2 - 1);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        if (!(ratio >= bound * (1 - 1e-10) && ratio <= 1 + 1e-10)) ok = false;
      }
      res.passed = res.passed && ok;
      char buf[96];
      std::snprintf(buf, sizeof buf, " n=%d [%.3f, %.3f]", cfg.sweep[l], lo, hi);
      line += buf;
    }
    res.details.push_back(line);
  }
  return res;
}

/// Sampled constants of the local strong monotonicity and Hölder continuity bounds (delta = 0).
///   S(u,e) - S(w,e) >= c S(e,e)^(2/r) (h^(2-r)(|u|^r + |w|^r))^((r-2)/r),   c > 0
///   |S(u,v) - S(w,v)| <= C h^(2-r) |e|^(r-1) |v|,   C <= mu 2^(2-r) N^((2-r)/2)
inline std::pair<CheckResult, CheckResult> check_stabilization_bounds(const CheckConfig& cfg) {
  CheckResult mono{"stabilization monotonicity"}, cont{"stabilization Hölder continuity"};
  std::mt19937_64 rng(cfg.seed + 23);
  const auto meshes = detail::sweep_meshes(cfg);
  for (double r : cfg.r_values) {
    const auto law = make_law(r, 0.0, 2.0);
    for (auto kind : {StabilizationKind::s1, StabilizationKind::s2}) {
      double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0, worst_bound = 0.0;
      for (const auto& mesh : meshes) {
        const auto d = discretize(mesh, cfg.k);
        for (int s = 0; s < cfg.stab_samples; ++s) {
          const auto& E = d.spaces[static_cast<std::size_t>(s) % d.spaces.size()];
          const double h = E.h();
          const Vec u = detail::random_tilde(E, rng);
          // half the pairs are close together
          const Vec w = s % 2 == 0 ? detail::random_tilde(E, rng) : Vec(u + 1e-3 * detail::random_tilde(E, rng));
          const Vec v = detail::random_tilde(E, rng);
          const Vec e = u - w;
          if (e.norm() == 0.0) continue;
          const Vec su = cfg.stabilization(E, law, kind, r, u), sw = cfg.stabilization(E, law, kind, r, w);
          const double see = e.dot(cfg.stabilization(E, law, kind, r, e));
          const double lhs = e.dot(su - sw);
          const double rhs = std::pow(see, 2 / r) *
                             std::pow(std::pow(h, 2 - r) * (std::pow(u.norm(), r) + std::pow(w.norm(), r)), (r - 2) / r);
          // a form with S(e, e) < 0 is not monotone, whatever the ratio says
          cmin = see < 0.0 || !std::isfinite(lhs / rhs) ? -std::numeric_limits<double>::infinity()
                                                         : std::min(cmin, lhs / rhs);
          const double c = std::abs(v.dot(su - sw)) / (std::pow(h, 2 - r) * std::pow(e.norm(), r - 1) * v.norm());
          cmax = std::max(cmax, c);
          const double bound = law.mu_max * std::pow(2.0, 2 - r) *
                               (kind == StabilizationKind::s2 ? std::pow(static_cast<double>(E.n_dofs()), (2 - r) / 2) : 1.0);
          worst_bound = std::max(worst_bound, c / bound);
        }
      }
      char buf[160];
      std::snprintf(buf, sizeof buf, "r = %.2f %s: sampled c = %.4e", r, to_string(kind), cmin);
      mono.details.push_back(buf);
      mono.passed = mono.passed && cmin > 0.0 && std::isfinite(cmin);
      std::snprintf(buf, sizeof buf, "r = %.2f %s: sampled C = %.4e (%.3f of the bound)", r, to_string(kind), cmax,
                    worst_bound);
      cont.details.push_back(buf);
      cont.passed = cont.passed && std::isfinite(cmax) && cmax > 0.0 && worst_bound <= 1.0 + 1e-9;
    }
  }
  return {mono, cont};
}

inline CheckResult check_assumption1_suite(const CheckConfig& cfg) {
  CheckResult res{"constitutive law sampling"};
  for (double r : cfg.r_values)
    for (double delta : {0.0, 1.0}) {
      const auto law = make_law(r, delta, 2.0);
      const auto rep = check_assumption1(law, cfg.law_samples, cfg.seed + 31);
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "r = %.2f delta = %.0f: sigma_c = %.4f sigma_m = %.4f, %zu samples, %zu + %zu violations, "
                    "worst ratios %.3f / %.3f",
                    r, delta, law.sigma_c(), law.sigma_m(), rep.samples, rep.continuity_violations,
                    rep.monotonicity_violations, rep.worst_continuity_ratio, rep.worst_monotonicity_ratio);
      res.details.push_back(buf);
      res.passed = res.passed && rep.ok() && rep.samples > 0;
    }
  return res;
}

namespace detail {

inline std::vector<std::pair<std::string, PolygonalMesh>> patch_meshes(const CheckConfig& cfg) {
  std::vector<std::pair<std::string, PolygonalMesh>> out;
  out.emplace_back("distorted quads n=6", generate_quadrilateral_distorted(6, cfg.distortion, cfg.seed));
  out.emplace_back("triangles n=6", generate_triangular(6, {0.0, 1.0, 0.0, 1.0}));
  if (!cfg.voronoi_path.empty()) out.emplace_back("loaded " + cfg.voronoi_path, load_mesh(cfg.voronoi_path));
  return out;
}

}  // namespace detail

/// Regularity violations are listed as warnings; the suite itself does not fail on them.
inline CheckResult check_regularity_suite(const CheckConfig& cfg) {
  CheckResult res{"mesh regularity"};
  for (const auto& [name, mesh] : detail::patch_meshes(cfg)) {
    const auto rep = check_mesh_regularity(mesh, cfg.rho);
    res.details.push_back(name + detail::fmt(": rho = %.2f, ", cfg.rho) + std::to_string(rep.violating.size()) +
                          " of " + std::to_string(mesh.n_cells()) + " cells violate");
    for (std::size_t c : rep.violating) {
      const auto& cr = rep.cells[c];
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: cell %zu edge ratio %.3f, ball ratio %.3f", name.c_str(), c, cr.edge_ratio,
                    cr.ball_ratio);
      res.warnings.push_back(buf);
    }
  }
  return res;
}

/// Divergence-free polynomial velocity and polynomial pressure at r = 2 are reproduced.
inline CheckResult check_patch_suite(const CheckConfig& cfg) {
  CheckResult res{"patch test"};
  const auto mc = make_patch_case(cfg.k, cfg.seed);
  for (const auto& [name, mesh] : detail::patch_meshes(cfg)) {
    const auto d = discretize(mesh, cfg.k);
    const auto sol = solve_nonnewtonian(d, mc.problem(), FixedPointConfig{});
    const auto err = compute_errors(d, mc, sol.u, sol.p);
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: err_u %.3e err_p %.3e err_sigma %.3e", name.c_str(), err.u, err.p, err.sigma);
    res.details.push_back(buf);
    res.passed = res.passed && err.u <= 1e-9 && err.p <= 1e-9 && err.sigma <= 1e-9;
  }
  return res;
}

/// Smallest nonzero generalized eigenvalue of B H^-1 B^T against the pressure mass matrix,
/// with H the discrete H1 seminorm on free velocity DoFs; returns its square root.
inline double inf_sup_constant(const Discretization& d) {
  const auto& map = d.map;
  Triplets th;
  Mat mass = Mat::Zero(map.n_pressure, map.n_pressure);
  for (std::size_t c = 0; c < d.spaces.size(); ++c) {
    const auto& E = d.spaces[c];
    const Mat g = E.gram_block(E.k - 1);
    Mat g4 = Mat::Zero(4 * g.rows(), 4 * g.cols());
    for (int t = 0; t < 4; ++t) g4.block(t * g.rows(), t * g.cols(), g.rows(), g.cols()) = g;
    const Mat ip = Mat::Identity(E.n_dofs(), E.n_dofs()) - E.projector_dofs;
    const Mat he = E.pi_grad.transpose() * g4 * E.pi_grad + ip.transpose() * ip;
    const auto& dofs = map.cell_dofs[c];
    for (std::size_t i = 0; i < dofs.size(); ++i)
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const int fi = map.free_index[static_cast<std::size_t>(dofs[i])];
        const int fj = map.free_index[static_cast<std::size_t>(dofs[j])];
        if (fi >= 0 && fj >= 0) th.emplace_back(fi, fj, he(static_cast<long>(i), static_cast<long>(j)));
      }
    const int off = map.pressure_offset(c), pb = map.pressure_block;
    mass.block(off, off, pb, pb) = E.gram_block(E.k - 1);
  }
  SpMat H(map.n_free, map.n_free);
  H.setFromTriplets(th.begin(), th.end());
  AssembledSystem sys;
  assemble_divergence(d, sys);
  Mat bt = Mat::Zero(map.n_free, map.n_pressure);
  for (int col = 0; col < sys.B.outerSize(); ++col)
    for (SpMat::InnerIterator it(sys.B, col); it; ++it) {
      const int f = map.free_index[static_cast<std::size_t>(it.col())];
      if (f >= 0) bt(f, it.row()) += it.value();
    }
  Eigen::SimplicialLDLT<SpMat> ldlt(H);
  if (ldlt.info() != Eigen::Success) throw NumericalError("H1 matrix factorization failed in the inf-sup check");
  const Mat x = ldlt.solve(bt);
  Mat s = bt.transpose() * x;
  s = 0.5 * (s + s.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(s, mass);
  const Vec ev = es.eigenvalues();
  // the constant pressure is in the kernel when the whole boundary is Dirichlet
  const int skip = map.mean_constraint ? 1 : 0;
  return std::sqrt(std::max(ev[skip], 0.0));
}

inline CheckResult check_inf_sup_suite(const CheckConfig& cfg) {
  CheckResult res{"discrete inf-sup proxy"};
  std::vector<double> beta;
  for (int n : cfg.sweep) {
    const auto mesh = generate_quadrilateral_distorted(n, cfg.distortion, cfg.seed);
    const auto d = discretize(mesh, cfg.k);
    beta.push_back(inf_sup_constant(d));
    res.details.push_back("n = " + std::to_string(n) + detail::fmt(": beta = %.5f", beta.back()));
  }
  const double lo = *std::min_element(beta.begin(), beta.end()), hi = *std::max_element(beta.begin(), beta.end());
  const double variation = hi > 0 ? (hi - lo) / hi : 1.0;
  res.details.push_back(detail::fmt("variation %.3f", variation));
  res.passed = lo > 0.0 && variation <= 0.2;
  return res;
}

inline CheckReport run_checks(const CheckConfig& cfg) {
  CheckReport rep;
  rep.results.push_back(check_projector_reproduction(cfg));
  rep.results.push_back(check_stabilization_equivalence(cfg));
  auto [mono, cont] = check_stabilization_bounds(cfg);
  rep.results.push_back(mono);
  rep.results.push_back(cont);
  rep.results.push_back(check_assumption1_suite(cfg));
  rep.results.push_back(check_regularity_suite(cfg));
  rep.results.push_back(check_patch_suite(cfg));
  rep.results.push_back(check_inf_sup_suite(cfg));
  return rep;
}

inline void print_report(const CheckReport& rep, std::ostream& out) {
  for (const auto& r : rep.results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << '\n';
    for (const auto& d : r.details) out << "    " << d << '\n';
    for (const auto& w : r.warnings) out << "    warning: " << w << '\n';
  }
}

}  // namespace vemflow
