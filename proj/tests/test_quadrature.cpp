#include "vemflow/quadrature.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace vemflow;

namespace {

double rect_monomial(double x0, double x1, double y0, double y1, int a, int b) {
  auto prim = [](double t0, double t1, int p) { return (std::pow(t1, p + 1) - std::pow(t0, p + 1)) / (p + 1); };
  return prim(x0, x1, a) * prim(y0, y1, b);
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double integrate(const QuadratureRule& r, int a, int b) {
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q].x(), a) * std::pow(r.points[q].y(), b);
  return s;
}

}  // namespace

TEST(GaussLegendre, ExactForDegree2nMinus1) {
  for (int n = 1; n <= 8; ++n) {
    const auto g = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * std::pow(g.points[i], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " p=" << p;
    }
  }
}

TEST(GaussLobatto, InteriorNodesAreSymmetricAndSorted) {
  for (int k = 2; k <= 6; ++k) {
    const auto n = gauss_lobatto_interior(k);
    ASSERT_EQ(static_cast<int>(n.size()), k - 1);
    for (int j = 0; j < k - 1; ++j) {
      EXPECT_NEAR(n[static_cast<std::size_t>(j)] + n[static_cast<std::size_t>(k - 2 - j)], 1.0, 1e-14);
      if (j > 0) EXPECT_LT(n[static_cast<std::size_t>(j - 1)], n[static_cast<std::size_t>(j)]);
    }
  }
}

TEST(PolygonQuadrature, UnitSquareMonomials) {
  const std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int order = 0; order <= 10; ++order) {
    const auto r = polygon_quadrature(sq, order);
    for (double w : r.weights) EXPECT_GT(w, 0.0);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b)
        EXPECT_NEAR(integrate(r, a, b), 1.0 / ((a + 1) * (b + 1)), 1e-13);
  }
}

TEST(PolygonQuadrature, ReferenceTriangle) {
  const std::vector<Point> t{{0, 0}, {1, 0}, {0, 1}};
  const auto r = polygon_quadrature(t, 9);
  for (int a = 0; a <= 9; ++a)
    for (int b = 0; a + b <= 9; ++b)
      EXPECT_NEAR(integrate(r, a, b), factorial(a) * factorial(b) / factorial(a + b + 2), 1e-14);
}

TEST(PolygonQuadrature, NonStarShapedFallsBackToEarClipping) {
  // C shape: [0,3]x[0,3] minus [1,3]x[1,2]; its centroid lies in the notch.
  const std::vector<Point> c{{0, 0}, {3, 0}, {3, 1}, {1, 1}, {1, 2}, {3, 2}, {3, 3}, {0, 3}};
  const auto g = compute_geometry(c);
  EXPECT_FALSE(fan_is_valid(c, g.centroid));
  const auto r = polygon_quadrature(c, 6);
  EXPECT_NEAR(r.total_weight(), 7.0, 1e-13);
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; a + b <= 6; ++b) {
      const double exact = rect_monomial(0, 3, 0, 3, a, b) - rect_monomial(1, 3, 1, 2, a, b);
      EXPECT_NEAR(integrate(r, a, b), exact, 1e-11 * std::max(1.0, std::abs(exact)));
    }
}

TEST(EarClip, TriangleCountAndArea) {
  const std::vector<Point> c{{0, 0}, {3, 0}, {3, 1}, {1, 1}, {1, 2}, {3, 2}, {3, 3}, {0, 3}};
  const auto tris = ear_clip(c);
  EXPECT_EQ(tris.size(), c.size() - 2);
  double area = 0.0;
  for (const auto& t : tris) area += std::abs(cross2(c[t[1]] - c[t[0]], c[t[2]] - c[t[0]])) / 2;
  EXPECT_NEAR(area, 7.0, 1e-14);
}

TEST(EdgeQuadrature, ExactOnSegment) {
  const Point a(0.2, -0.1), b(1.4, 0.8);
  const auto r = edge_quadrature(a, b, 7);
  // integral of x along the segment = length * midpoint x
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * r.points[q].x();
  EXPECT_NEAR(s, (b - a).norm() * 0.8, 1e-14);
}
