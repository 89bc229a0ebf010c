#include "vemflow/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  vemflow::RunConfig cfg;
  CLI::App app{"Divergence-free virtual elements for power-law and Carreau-Yasuda Stokes flow"};
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--case", cfg.case_id, "test1 | test2 | patch | custom")->capture_default_str();
  app.add_option("--r", cfg.r, "power-law exponent in (1, 2]")->capture_default_str();
  app.add_option("--delta", cfg.delta, "Carreau-Yasuda delta (ignored by test2)")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "Carreau-Yasuda alpha (custom case)")->capture_default_str();
  app.add_option("--mu", cfg.mu, "viscosity scale (custom case)")->capture_default_str();
  app.add_option("--mesh", cfg.mesh, "quad | tri | file")->capture_default_str();
  app.add_option("--mesh-file", cfg.mesh_file, "JSON mesh, used with --mesh file");
  app.add_option("--n", cfg.n, "cells per side for solve")->capture_default_str();
  app.add_option("--levels", cfg.levels, "1/h values for study")->capture_default_str();
  app.add_option("--k", cfg.k, "polynomial degree")->capture_default_str();
  app.add_option("--stab", cfg.stab, "s1 | s2")->capture_default_str();
  app.add_option("--tol", cfg.tol, "fixed-point increment tolerance")->capture_default_str();
  app.add_option("--max-iter", cfg.max_iter, "fixed-point iterations per stage")->capture_default_str();
  app.add_option("--distortion", cfg.distortion, "vertex distortion of quad meshes")->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for meshes and sampling")->capture_default_str();
  app.add_option("--threads", cfg.threads, "assembly threads")->capture_default_str();
  app.add_option("--quad-order", cfg.quad_order, "volumetric quadrature order, -1 for 2k+3")->capture_default_str();
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();
  app.add_option("--force-x", cfg.force_x, "custom case body force")->capture_default_str();
  app.add_option("--force-y", cfg.force_y, "custom case body force")->capture_default_str();
  app.add_option("--lid", cfg.lid, "custom case lid velocity")->capture_default_str();
  app.add_option("--rho", cfg.rho, "regularity parameter for check")->capture_default_str();
  app.add_option("--voronoi", cfg.voronoi, "extra JSON mesh for the check suites");
  app.add_option("--inject", cfg.inject, "fault injection for check: s1-sign");

  app.add_subcommand("solve", "single solve: samples, iteration log, divergence diagnostic");
  app.add_subcommand("study", "convergence study: study.csv and study.json");
  app.add_subcommand("check", "property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return vemflow::kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return vemflow::run_command(cfg);
}
