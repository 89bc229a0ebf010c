#include "vemflow/verify.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace vemflow;

namespace {

// -div sigma(eps u) + grad p by central differences of the closed-form fields
Eigen::Vector2d fd_force(const ManufacturedCase& mc, const Point& x, double h) {
  auto sig = [&](const Point& y) { return mc.stress_exact(y); };
  const Point ex(h, 0), ey(0, h);
  const Tensor2 dsx = (sig(x + ex) - sig(x - ex)) / (2 * h);
  const Tensor2 dsy = (sig(x + ey) - sig(x - ey)) / (2 * h);
  const Eigen::Vector2d div(dsx(0, 0) + dsy(0, 1), dsx(1, 0) + dsy(1, 1));
  const Eigen::Vector2d gp((mc.p(x + ex) - mc.p(x - ex)) / (2 * h), (mc.p(x + ey) - mc.p(x - ey)) / (2 * h));
  return -div + gp;
}

// integral of g over [a, a+s] x [b, b+s] with a 12x12 Gauss rule on [0, 1]
double square_integral(const std::function<double(const Point&)>& g, double a, double b, double s) {
  const auto q = gauss_legendre(12);
  double v = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      v += q.weights[i] * q.weights[j] * g({a + s * q.points[i], b + s * q.points[j]});
  return v * s * s;
}

// integral over [0,1]^2, geometrically graded toward the origin
double graded_integral(const std::function<double(const Point&)>& g) {
  double v = 0.0, s = 1.0;
  for (int l = 0; l < 45; ++l) {
    const double t = s / 2;
    v += square_integral(g, t, 0, t) + square_integral(g, 0, t, t) + square_integral(g, t, t, t);
    s = t;
  }
  return v;
}

// integral over [0,1]^2 on a uniform 8x8 grid of Gauss squares
double smooth_integral(const std::function<double(const Point&)>& g) {
  double v = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) v += square_integral(g, i / 8.0, j / 8.0, 1 / 8.0);
  return v;
}

}  // namespace

TEST(Manufactured, Test1ForceMatchesFiniteDifferences) {
  for (double r : {1.1, 1.5, 2.0})
    for (double delta : {0.0, 1.0}) {
      const auto mc = make_test1(r, delta);
      for (const Point x : {Point(0.13, 0.71), Point(0.4, 0.2), Point(0.66, 0.52), Point(0.9, 0.05)}) {
        const Eigen::Vector2d fd = fd_force(mc, x, 1e-5), f = mc.f(x);
        EXPECT_LT((fd - f).norm(), 1e-6 * std::max(1.0, f.norm())) << "r=" << r << " delta=" << delta;
      }
    }
}

TEST(Manufactured, Test2ForceMatchesFiniteDifferences) {
  for (double r : {1.25, 1.5, 2.0}) {
    const auto mc = make_test2(r);
    for (const Point x : {Point(0.3, 0.4), Point(-0.7, 0.1), Point(0.05, -0.9), Point(-0.5, -0.5)}) {
      const Eigen::Vector2d fd = fd_force(mc, x, 1e-5), f = mc.f(x);
      EXPECT_LT((fd - f).norm(), 1e-6 * std::max(1.0, f.norm())) << "r=" << r;
    }
  }
}

TEST(Manufactured, VelocityIsDivergenceFree) {
  for (const auto& mc : {make_test1(1.5, 1.0), make_test2(1.5)})
    for (const Point x : {Point(0.3, 0.4), Point(0.8, 0.1), Point(0.55, 0.95)}) {
      EXPECT_NEAR(mc.grad_u(x).trace(), 0.0, 1e-14);
      const double h = 1e-6;
      const double fd = (mc.u(x + Point(h, 0)).x() - mc.u(x - Point(h, 0)).x()) / (2 * h) +
                        (mc.u(x + Point(0, h)).y() - mc.u(x - Point(0, h)).y()) / (2 * h);
      EXPECT_NEAR(fd, 0.0, 1e-8);
    }
}

TEST(Manufactured, GradientMatchesFiniteDifferences) {
  for (const auto& mc : {make_test1(1.5, 1.0), make_test2(1.5)})
    for (const Point x : {Point(0.3, 0.4), Point(0.8, 0.1)}) {
      const double h = 1e-6;
      Tensor2 fd;
      fd.col(0) = (mc.u(x + Point(h, 0)) - mc.u(x - Point(h, 0))) / (2 * h);
      fd.col(1) = (mc.u(x + Point(0, h)) - mc.u(x - Point(0, h))) / (2 * h);
      EXPECT_LT((fd - mc.grad_u(x)).norm(), 1e-8);
    }
}

TEST(Manufactured, PressuresHaveZeroMean) {
  const auto t1 = make_test1(1.5, 1.0);
  EXPECT_NEAR(smooth_integral(t1.p), 0.0, 1e-12);
  for (double r : {1.1, 1.25, 1.5, 2.0}) {
    const auto t2 = make_test2(r);
    // symmetric in both axes, so the mean over (-1,1)^2 is the mean over (0,1)^2
    EXPECT_NEAR(graded_integral(t2.p), 0.0, 1e-8) << "r=" << r;
  }
}

TEST(Manufactured, PressureConstantAgainstGradedQuadrature) {
  for (double gamma : {0.01, 0.61, 1.01}) {
    const double ref = graded_integral([gamma](const Point& x) { return std::pow(x.norm(), gamma); });
    EXPECT_NEAR(test2_pressure_mean(gamma), ref, 1e-10) << "gamma=" << gamma;
  }
  EXPECT_NEAR(test2_pressure_mean(0.0), 1.0, 1e-13);
  EXPECT_NEAR(test2_pressure_mean(2.0), 2.0 / 3.0, 1e-13);
}

TEST(Manufactured, Test2PointValues) {
  const auto mc = make_test2(1.5);
  EXPECT_LT((mc.u({1.0, 0.0}) - Eigen::Vector2d(0, -1)).norm(), 1e-15);
  EXPECT_EQ(mc.u({0.0, 0.0}).norm(), 0.0);
  EXPECT_TRUE(mc.f({0.0, 0.0}).allFinite());
}

TEST(Manufactured, PatchCaseIsPolynomialAndSolenoidal) {
  const auto mc = make_patch_case(2, 7);
  EXPECT_NEAR(smooth_integral(mc.p), 0.0, 1e-12);
  for (const Point x : {Point(0.3, 0.4), Point(0.8, 0.1)}) {
    EXPECT_NEAR(mc.grad_u(x).trace(), 0.0, 1e-12);
    EXPECT_LT((fd_force(mc, x, 1e-4) - mc.f(x)).norm(), 1e-6);
  }
}

TEST(Errors, ExactInterpolantOfPolynomialIsExact) {
  const auto mc = make_patch_case(2, 3);
  const auto mesh = generate_quadrilateral_distorted(4, 0.2, 1);
  const auto d = discretize(mesh, 2);
  const auto sol = solve_nonnewtonian(d, mc.problem(), FixedPointConfig{});
  const auto e = compute_errors(d, mc, sol.u, sol.p);
  EXPECT_LT(e.u, 1e-10);
  EXPECT_LT(e.p, 1e-10);
  EXPECT_LT(e.sigma, 1e-10);
}

TEST(Errors, InvariantUnderCellReordering) {
  const auto mc = make_test1(1.5, 1.0);
  const auto mesh = generate_quadrilateral_distorted(6, 0.2, 0);
  auto cells = mesh.cells();
  std::reverse(cells.begin(), cells.end());
  std::mt19937_64 rng(5);
  std::shuffle(cells.begin(), cells.end(), rng);
  const auto shuffled = build_mesh(mesh.vertices(), cells, mc.boundary);
  StudyConfig cfg;
  const auto a = run_level(mesh, mc, cfg, 6), b = run_level(shuffled, mc, cfg, 6);
  EXPECT_NEAR(a.errors.u, b.errors.u, 1e-10 * a.errors.u);
  EXPECT_NEAR(a.errors.p, b.errors.p, 1e-8 * a.errors.p);
  EXPECT_NEAR(a.errors.sigma, b.errors.sigma, 1e-10 * a.errors.sigma);
  EXPECT_EQ(a.log.summary(), b.log.summary());
}

TEST(Errors, DefaultOrderGrowsWithTheNormExponent) {
  EXPECT_EQ(default_error_order(7, 2, 2.0), 7);
  EXPECT_EQ(default_error_order(7, 2, 1.75), 10);
  EXPECT_EQ(default_error_order(7, 2, 1.5), 10);
  EXPECT_EQ(default_error_order(7, 2, 1.25), 16);
  EXPECT_EQ(default_error_order(7, 2, 1.1), 34);
  // L^11 pressure norm at r = 1.1: the default rule matches a much finer one
  const auto mc = make_test1(1.1, 1.0);
  const auto d = discretize(generate_quadrilateral_distorted(4, 0.2, 0), 2);
  const auto sol = solve_nonnewtonian(d, mc.problem(), FixedPointConfig{});
  const auto a = compute_errors(d, mc, sol.u, sol.p), b = compute_errors(d, mc, sol.u, sol.p, 51);
  EXPECT_NEAR(a.u, b.u, 1e-5 * b.u);
  EXPECT_NEAR(a.p, b.p, 1e-5 * b.p);
  EXPECT_NEAR(a.sigma, b.sigma, 1e-5 * b.sigma);
}

TEST(Rates, AveragedRateFormula) {
  EXPECT_NEAR(averaged_rate({0.5, 0.25, 0.125}, {4.0, 1.0, 0.25}), 2.0, 1e-14);
  // mean of the two per-step rates 1 and 3
  EXPECT_NEAR(averaged_rate({0.5, 0.25, 0.125}, {1.0, 0.5, 0.0625}), 2.0, 1e-14);
  EXPECT_TRUE(std::isnan(averaged_rate({0.5}, {1.0})));
}

TEST(Rates, NewtonianTest1IsSecondOrder) {
  StudyConfig cfg;
  cfg.one_over_h = {4, 8, 16};
  const auto rep = convergence_study(make_test1(2.0, 1.0), cfg);
  EXPECT_GT(rep.acr.u, 1.8);
  EXPECT_GT(rep.acr.p, 1.8);
  for (const auto& l : rep.levels) EXPECT_LE(l.divergence.ratio(), 1e-9);
}

TEST(Rates, MixedBoundaryConditions) {
  for (double r : {2.0, 1.75})
    for (int side : {1, 2}) {
      StudyConfig cfg;
      cfg.one_over_h = {4, 8, 16};
      const auto mc = with_neumann_side(make_test1(r, 1.0), side);
      const auto rep = convergence_study(mc, cfg);
      EXPECT_GT(rep.acr.u, 1.8) << "r=" << r << " side=" << side;
      EXPECT_GT(rep.acr.sigma, 1.8) << "r=" << r << " side=" << side;
    }
}

TEST(Study, CsvIsDeterministic) {
  StudyConfig cfg;
  cfg.one_over_h = {4, 8};
  const auto mc = make_test1(1.5, 1.0);
  std::ostringstream a, b;
  write_study_csv(convergence_study(mc, cfg), a);
  write_study_csv(convergence_study(mc, cfg), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "one_over_h,err_u,err_p,err_sigma,iters_stage1,iters_stage2");
}

TEST(Study, CallbackSeesPartialResults) {
  StudyConfig cfg;
  cfg.one_over_h = {2, 4};
  std::vector<std::size_t> seen;
  convergence_study(make_test1(2.0, 1.0), cfg, [&](const StudyReport& r) { seen.push_back(r.levels.size()); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2}));
  cfg.one_over_h = {4};
  EXPECT_THROW(convergence_study(make_test1(2.0, 1.0), cfg), ConfigError);
}

TEST(Study, JsonRoundsToFiveSignificantDigits) {
  EXPECT_EQ(format_sig5(1.23456789e-4), "1.2346e-04");
  StudyConfig cfg;
  cfg.one_over_h = {2, 4};
  const auto j = study_json(convergence_study(make_test1(2.0, 1.0), cfg));
  EXPECT_EQ(j["levels"].size(), 2u);
  EXPECT_EQ(j["levels"][0]["iterations"], "1|01");
}

TEST(Study, Test2UsesTheWholeDomain) {
  const auto mc = make_test2(2.0);
  const auto mesh = make_case_mesh(mc, MeshFamily::triangular, 4, 0.0, 0);
  EXPECT_NEAR(mesh.total_area(), 4.0, 1e-13);
  EXPECT_EQ(mesh.n_cells(), 2u * 8 * 8);
}
