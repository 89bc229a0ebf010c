#include "vemflow/poly.hpp"

#include <gtest/gtest.h>

using namespace vemflow;

TEST(Monomials, DimensionAndOrdering) {
  EXPECT_EQ(poly_dim(-1), 0);
  EXPECT_EQ(poly_dim(0), 1);
  EXPECT_EQ(poly_dim(3), 10);
  const auto idx = multi_indices(2);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(idx, expected);
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(monomial_index(idx[i]), static_cast<int>(i));
}

TEST(Monomials, ValuesOfNegativeDegreeAreEmpty) {
  const ScaledMonomials b({0, 0}, 1.0, 2);
  EXPECT_EQ(b.values({0.3, 0.2}, -1).size(), 0);
}

TEST(Calculus, DerivativeMatchesFiniteDifferences) {
  const ScaledMonomials b({0.2, -0.1}, 0.7, 4);
  Vec c(poly_dim(4));
  for (int i = 0; i < c.size(); ++i) c[i] = std::sin(1.0 + i);
  const Point x(0.35, 0.1);
  const double eps = 1e-6;
  for (int dir = 0; dir < 2; ++dir) {
    const Vec d = derivative_matrix(4, dir, 0.7) * c;
    const Point e = dir == 0 ? Point(eps, 0) : Point(0, eps);
    const double fd = (c.dot(b.values(x + e)) - c.dot(b.values(x - e))) / (2 * eps);
    EXPECT_NEAR(d.dot(b.values(x, 3)), fd, 1e-8);
  }
}

TEST(Calculus, LaplacianOfKnownPolynomial) {
  // h = 1, centre 0: p = x^2 y + y^3, lap p = 2y + 6y = 8y
  Vec c = Vec::Zero(poly_dim(3));
  c[monomial_index({2, 1})] = 1.0;
  c[monomial_index({0, 3})] = 1.0;
  const Vec l = laplacian_matrix(3, 1.0) * c;
  Vec expected = Vec::Zero(poly_dim(1));
  expected[monomial_index({0, 1})] = 8.0;
  EXPECT_LT((l - expected).norm(), 1e-15);
}

TEST(Calculus, SymgradOfRotationVanishes) {
  // v = (y, -x): rigid rotation
  Vec v = Vec::Zero(2 * poly_dim(1));
  v[monomial_index({0, 1})] = 1.0;
  v[poly_dim(1) + monomial_index({1, 0})] = -1.0;
  EXPECT_LT((symgrad_matrix(1, 1.0) * v).norm(), 1e-15);
  EXPECT_LT((div_matrix(1, 1.0) * v).norm(), 1e-15);
}

TEST(Calculus, MultiplyShiftsIndices) {
  const Mat m = multiply_matrix(1, {1, 1});
  EXPECT_EQ(m(monomial_index({2, 1}), monomial_index({1, 0})), 1.0);
  EXPECT_EQ(m(monomial_index({1, 2}), monomial_index({0, 1})), 1.0);
}

TEST(Projection, ReproducesPolynomials) {
  const std::vector<Point> tri{{0, 0}, {2, 0}, {0.5, 1.5}};
  const auto rule = polygon_quadrature(tri, 8);
  const ScaledMonomials b({0.8, 0.5}, 2.0, 3);
  const ScalarField f = [](const Point& x) { return 1 + x.x() * x.y() - 2 * x.y() * x.y() * x.y(); };
  const auto proj = l2_project(b, rule, f);
  EXPECT_LT(proj.gram_condition, 1e6);
  for (const auto& p : rule.points) EXPECT_NEAR(proj.coeffs.dot(b.values(p)), f(p), 1e-11);
}

TEST(Projection, GramIsSymmetricPositiveDefinite) {
  const std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const ScaledMonomials b({0.5, 0.5}, std::sqrt(2.0), 3);
  const Mat g = gram_matrix(b, polygon_quadrature(sq, 6));
  EXPECT_LT((g - g.transpose()).norm(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}
