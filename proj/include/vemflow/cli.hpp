#pragma once

// Command implementations behind the `vemflow` executable. Argument parsing lives in
// tools/vemflow.cpp; everything here takes a filled RunConfig and returns an exit code
// (0 success, 1 usage or configuration, 2 numerical failure).

#include "vemflow/checks.hpp"

#include <filesystem>
#include <iostream>

namespace vemflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

struct RunConfig {
  std::string command = "solve";
  std::string case_id = "test1";  // test1 | test2 | patch | custom
  double r = 2.0;
  double delta = 1.0;
  double alpha = 2.0;
  double mu = 1.0;
  std::string mesh = "quad";  // quad | tri | file
  std::string mesh_file;
  int n = 8;  // cells per side for a single solve
  std::vector<int> levels{4, 8, 16, 32};
  int k = 2;
  std::string stab = "s1";
  double tol = 1e-8;
  int max_iter = 200;
  double distortion = 0.2;
  std::uint64_t seed = 0;
  int threads = 1;
  int quad_order = -1;
  std::string out = "vemflow-out";
  // custom case: constant body force and a lid velocity on the top of the bounding box
  double force_x = 0.0;
  double force_y = 0.0;
  double lid = 1.0;
  // check command
  double rho = 0.1;
  std::string voronoi;
  std::string inject;  // "s1-sign" flips the S1 coefficient in the check suites

  void validate() const {
    if (command != "solve" && command != "study" && command != "check")
      throw ConfigError("unknown command '" + command + "'");
    if (case_id != "test1" && case_id != "test2" && case_id != "patch" && case_id != "custom")
      throw ConfigError("unknown case '" + case_id + "' (test1, test2, patch, custom)");
    if (!(r > 1.0 && r <= 2.0)) throw ConfigError("r must lie in (1, 2], got " + std::to_string(r));
    if (!(delta >= 0.0)) throw ConfigError("delta must be non-negative");
    if (!(alpha >= 1.0)) throw ConfigError("alpha must be at least 1");
    if (!(mu > 0.0)) throw ConfigError("mu must be positive");
    if (mesh != "quad" && mesh != "tri" && mesh != "file") throw ConfigError("mesh must be quad, tri or file");
    if (mesh == "file" && mesh_file.empty()) throw ConfigError("mesh = file needs a mesh file path");
    if (n < 1) throw ConfigError("n must be at least 1");
    if (k < 2) throw ConfigError("k must be at least 2");
    if (stab != "s1" && stab != "s2") throw ConfigError("stab must be s1 or s2");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
    if (!inject.empty() && inject != "s1-sign") throw ConfigError("unknown fault '" + inject + "'");
    for (int l : levels)
      if (l < 1) throw ConfigError("levels must be positive");
  }

  StabilizationKind stab_kind() const { return stab == "s2" ? StabilizationKind::s2 : StabilizationKind::s1; }

  FixedPointConfig fixed_point() const {
    FixedPointConfig fp;
    fp.tol = tol;
    fp.max_iter = max_iter;
    fp.stab = stab_kind();
    return fp;
  }

  /// Effective settings as key = value lines, readable back as a config file.
  std::string dump() const {
    std::ostringstream o;
    o.precision(17);
    o << "command = " << command << "\ncase = " << case_id << "\nr = " << r << "\ndelta = " << delta
      << "\nalpha = " << alpha << "\nmu = " << mu << "\nmesh = " << mesh << "\nmesh-file = " << mesh_file
      << "\nn = " << n << "\nlevels = [";
    for (std::size_t i = 0; i < levels.size(); ++i) o << (i ? ", " : "") << levels[i];
    o << "]\nk = " << k << "\nstab = " << stab << "\ntol = " << tol << "\nmax-iter = " << max_iter
      << "\ndistortion = " << distortion << "\nseed = " << seed << "\nthreads = " << threads
      << "\nquad-order = " << quad_order << "\nforce-x = " << force_x << "\nforce-y = " << force_y
      << "\nlid = " << lid << "\nrho = " << rho << "\nvoronoi = " << voronoi << "\n";
    return o.str();
  }
};

namespace detail {

inline std::optional<ManufacturedCase> manufactured(const RunConfig& cfg) {
  if (cfg.case_id == "test1") return make_test1(cfg.r, cfg.delta);
  if (cfg.case_id == "test2") return make_test2(cfg.r);
  if (cfg.case_id == "patch") return make_patch_case(cfg.k, cfg.seed);
  return std::nullopt;
}

inline Box case_domain(const RunConfig& cfg) {
  if (cfg.case_id == "test2") return {-1.0, 1.0, -1.0, 1.0};
  return {0.0, 1.0, 0.0, 1.0};
}

inline PolygonalMesh build_run_mesh(const RunConfig& cfg, int n, const Box& box) {
  if (cfg.mesh == "file") return load_mesh(cfg.mesh_file);
  if (cfg.mesh == "tri") return generate_triangular(n, box);
  return generate_quadrilateral_distorted(n, cfg.distortion, cfg.seed, box);
}

inline ProblemData custom_problem(const RunConfig& cfg, const PolygonalMesh& mesh) {
  ProblemData data;
  data.law = make_law(cfg.r, cfg.delta, cfg.alpha, cfg.mu);
  const Eigen::Vector2d f(cfg.force_x, cfg.force_y);
  data.force = [f](const Point&) { return f; };
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& v : mesh.vertices()) top = std::max(top, v.y());
  const double lid = cfg.lid, tol = 1e-12 * std::max(1.0, std::abs(top));
  data.dirichlet = [lid, top, tol](const Point& x) {
    return Eigen::Vector2d(std::abs(x.y() - top) <= tol ? lid : 0.0, 0.0);
  };
  return data;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::ofstream out(std::filesystem::path(dir) / name);
  if (!out) throw ConfigError("cannot write " + name + " in " + dir);
  return out;
}

/// Pi0_k u_h and p_h at the centroid and the midpoints between centroid and vertices.
inline void write_samples(const Discretization& d, const Vec& u, const Vec& p, std::ostream& out) {
  out << "cell,x,y,ux,uy,p\n";
  char buf[256];
  for (std::size_t c = 0; c < d.spaces.size(); ++c) {
    const auto& E = d.spaces[c];
    const Vec uc = E.pi_zero * d.local_dofs(c, u);
    const Vec pc = d.local_pressure(c, p);
    std::vector<Point> pts{E.geometry.centroid};
    for (const auto& v : E.vertices) pts.emplace_back(0.5 * (v + E.geometry.centroid));
    for (const auto& x : pts) {
      const Eigen::Vector2d ux = eval_vector(uc, E.basis.values(x, E.k));
      std::snprintf(buf, sizeof buf, "%zu,%.10e,%.10e,%.10e,%.10e,%.10e\n", c, x.x(), x.y(), ux.x(), ux.y(),
                    pc.dot(E.basis.values(x, E.k - 1)));
      out << buf;
    }
  }
}

inline void write_iteration_log(const IterationLog& log, std::ostream& out) {
  out << "iterations " << log.summary() << '\n';
  for (const auto* st : {&log.stage1, &log.stage2}) {
    out << "stage r_eff=" << st->r_eff << " iterations=" << st->iterations << " converged=" << st->converged
        << " residual=" << format_sig5(st->residual) << " linear_residual=" << format_sig5(st->linear_residual)
        << " capped_points=" << st->capped_points << '\n';
    out << "  increments";
    for (double v : st->increments) out << ' ' << format_sig5(v);
    out << '\n';
  }
  for (const auto& w : log.warnings) out << "warning: " << w << '\n';
}

inline int failure(const std::string& dir, const std::string& what, std::ostream& err) {
  err << "numerical failure: " << what << '\n';
  try {
    ensure_dir(dir);
    auto f = open_out(dir, "failure.txt");
    f << what << '\n';
  } catch (const std::exception&) {
  }
  return kExitNumerical;
}

}  // namespace detail

inline int cmd_solve(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  detail::ensure_dir(cfg.out);
  detail::open_out(cfg.out, "config.txt") << cfg.dump();
  const auto mc = detail::manufactured(cfg);
  const auto mesh = detail::build_run_mesh(cfg, cfg.n, detail::case_domain(cfg));
  for (const auto& w : mesh.warnings()) log << "mesh warning: " << w << '\n';
  try {
    const auto d = discretize(mesh, cfg.k, cfg.quad_order, cfg.threads);
    const ProblemData data = mc ? mc->problem() : detail::custom_problem(cfg, mesh);
    const auto sol = solve_nonnewtonian(d, data, cfg.fixed_point());
    const auto div = divergence_diagnostic(d, sol.u);
    {
      auto f = detail::open_out(cfg.out, "solution.csv");
      detail::write_samples(d, sol.u, sol.p, f);
    }
    {
      auto f = detail::open_out(cfg.out, "iterations.txt");
      detail::write_iteration_log(sol.log, f);
    }
    {
      auto f = detail::open_out(cfg.out, "divergence.txt");
      f << "max_div " << format_sig5(div.max_div) << "\nmax_grad " << format_sig5(div.max_grad) << "\nratio "
        << format_sig5(div.ratio()) << '\n';
    }
    log << "cells " << mesh.n_cells() << ", velocity DoFs " << d.map.n_velocity << ", pressure DoFs "
        << d.map.n_pressure << '\n';
    log << "iterations " << sol.log.summary() << ", div ratio " << format_sig5(div.ratio()) << '\n';
    for (const auto& w : sol.log.warnings) log << "warning: " << w << '\n';
    if (mc) {
      const auto e = compute_errors(d, *mc, sol.u, sol.p);
      log << "err_u " << format_sig5(e.u) << "  err_p " << format_sig5(e.p) << "  err_sigma " << format_sig5(e.sigma)
          << '\n';
      nlohmann::json j = {{"err_u", e.u}, {"err_p", e.p}, {"err_sigma", e.sigma}, {"iterations", sol.log.summary()},
                          {"div_ratio", div.ratio()}};
      detail::open_out(cfg.out, "errors.json") << j.dump(2) << '\n';
    }
  } catch (const NumericalError& e) {
    return detail::failure(cfg.out, e.what(), err);
  }
  return kExitOk;
}

inline int cmd_study(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  detail::ensure_dir(cfg.out);
  detail::open_out(cfg.out, "config.txt") << cfg.dump();
  const auto mc = detail::manufactured(cfg);
  if (!mc) throw ConfigError("a study needs a case with a known solution (test1, test2, patch)");
  if (cfg.mesh == "file") throw ConfigError("a study needs a generated mesh family (quad or tri)");
  if (cfg.levels.size() < 2) throw ConfigError("a study needs at least two levels");
  StudyConfig sc;
  sc.family = cfg.mesh == "tri" ? MeshFamily::triangular : MeshFamily::quadrilateral;
  sc.one_over_h = cfg.levels;
  sc.k = cfg.k;
  sc.distortion = cfg.distortion;
  sc.seed = cfg.seed;
  sc.fixed_point = cfg.fixed_point();
  sc.integration_order = cfg.quad_order;
  sc.threads = cfg.threads;
  auto flush = [&](const StudyReport& rep) {
    auto csv = detail::open_out(cfg.out, "study.csv");
    write_study_csv(rep, csv);
    detail::open_out(cfg.out, "study.json") << study_json(rep).dump(2) << '\n';
    const auto& l = rep.levels.back();
    log << "1/h = " << l.one_over_h << "  err_u " << format_sig5(l.errors.u) << "  err_p " << format_sig5(l.errors.p)
        << "  err_sigma " << format_sig5(l.errors.sigma) << "  iterations " << l.log.summary() << '\n';
  };
  try {
    const auto rep = convergence_study(*mc, sc, flush);
    log << "a.c.r.  err_u " << format_sig5(rep.acr.u) << "  err_p " << format_sig5(rep.acr.p) << "  err_sigma "
        << format_sig5(rep.acr.sigma) << '\n';
  } catch (const NumericalError& e) {
    return detail::failure(cfg.out, e.what(), err);
  }
  return kExitOk;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& log, std::ostream&) {
  detail::ensure_dir(cfg.out);
  detail::open_out(cfg.out, "config.txt") << cfg.dump();
  CheckConfig cc;
  cc.seed = cfg.seed;
  cc.k = cfg.k;
  cc.distortion = cfg.distortion;
  cc.rho = cfg.rho;
  cc.voronoi_path = cfg.voronoi;
  if (cfg.inject == "s1-sign") cc.stabilization = sign_flipped_s1(library_stabilization());
  const auto rep = run_checks(cc);
  print_report(rep, log);
  auto f = detail::open_out(cfg.out, "check_report.txt");
  print_report(rep, f);
  return rep.ok() ? kExitOk : kExitNumerical;
}

/// Dispatches on cfg.command and maps exceptions to exit codes.
inline int run_command(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    cfg.validate();
    if (cfg.command == "solve") return cmd_solve(cfg, log, err);
    if (cfg.command == "study") return cmd_study(cfg, log, err);
    return cmd_check(cfg, log, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MeshError& e) {
    err << "mesh error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    return detail::failure(cfg.out, e.what(), err);
  }
}

}  // namespace vemflow
