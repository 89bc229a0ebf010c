#pragma once

#include "vemflow/geometry.hpp"

#include <cmath>
#include <array>
#include <numbers>
#include <span>
#include <vector>

namespace vemflow {

/// Points and positive weights; the weights sum to the measure of the domain.
struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// One-dimensional rule on a reference interval.
struct QuadratureRule1D {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

namespace detail {

// Legendre P_n and its derivative at x.
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

/// n-point Gauss–Legendre rule on [0, 1]; exact for degree 2n-1.
inline QuadratureRule1D gauss_legendre(int n) {
  QuadratureRule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, dp] = detail::legendre(n, x);
    (void)p;
    r.points[n - 1 - i] = 0.5 * (x + 1.0);
    r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// The k-1 interior Gauss–Lobatto nodes of the (k+1)-point rule, mapped to (0, 1) and sorted.
inline std::vector<double> gauss_lobatto_interior(int k) {
  std::vector<double> nodes;
  for (int j = 1; j < k; ++j) {
    // roots of P_k'
    double x = -std::cos(std::numbers::pi * j / k);
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(k, x);
      const double d2p = (2.0 * x * dp - k * (k + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / d2p;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes.push_back(0.5 * (x + 1.0));
  }
  return nodes;
}

/// Number of Gauss points per direction needed for total degree `order`.
inline int gauss_points_for(int order) { return std::max(1, order / 2 + 1); }

/// Gauss–Legendre rule on the segment [a, b], exact to `order`; weights in length units.
inline QuadratureRule edge_quadrature(const Point& a, const Point& b, int order) {
  const auto g = gauss_legendre(gauss_points_for(order));
  const double len = (b - a).norm();
  QuadratureRule r;
  for (std::size_t i = 0; i < g.size(); ++i) {
    r.points.push_back(a + g.points[i] * (b - a));
    r.weights.push_back(g.weights[i] * len);
  }
  return r;
}

/// Collapsed (Duffy) Gauss rule on triangle (apex, b, c), exact to total degree `order`.
/// The collapsed corner is `apex`; no point lies on the triangle boundary.
inline void append_triangle_rule(const Point& apex, const Point& b, const Point& c, int order,
                                 QuadratureRule& out) {
  const double twice_area = std::abs(cross2(b - apex, c - apex));
  const auto gx = gauss_legendre(gauss_points_for(order + 1));
  const auto gy = gauss_legendre(gauss_points_for(order));
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double xi = gx.points[i];
    for (std::size_t j = 0; j < gy.size(); ++j) {
      const double eta = gy.points[j];
      out.points.push_back(apex + xi * ((1.0 - eta) * (b - apex) + eta * (c - apex)));
      out.weights.push_back(gx.weights[i] * gy.weights[j] * xi * twice_area);
    }
  }
}

/// Ear-clipping triangulation of a simple CCW polygon; returns index triples.
inline std::vector<std::array<int, 3>> ear_clip(std::span<const Point> poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> tris;
  auto inside = [&](const Point& p, const Point& a, const Point& b, const Point& c) {
    return cross2(b - a, p - a) >= 0 && cross2(c - b, p - b) >= 0 && cross2(a - c, p - c) >= 0;
  };
  std::size_t guard = 0;
  while (idx.size() > 3 && guard++ < 10 * poly.size() * poly.size()) {
    const std::size_t m = idx.size();
    bool clipped = false;
    for (std::size_t i = 0; i < m; ++i) {
      const int ia = idx[(i + m - 1) % m], ib = idx[i], ic = idx[(i + 1) % m];
      const Point &a = poly[ia], &b = poly[ib], &c = poly[ic];
      if (cross2(b - a, c - b) <= 0) continue;
      bool ear = true;
      for (int j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (inside(poly[j], a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + static_cast<long>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw MeshError("ear clipping failed: polygon is not simple");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

/// True when every fan triangle (centroid, v_i, v_{i+1}) is positively oriented.
inline bool fan_is_valid(std::span<const Point> poly, const Point& centroid) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if (cross2(a - centroid, b - centroid) <= 1e-14 * (b - a).squaredNorm()) return false;
  }
  return true;
}

/// Quadrature on a CCW polygon exact to total degree `order`. Fan from the centroid
/// when the polygon is star-shaped with respect to it, ear clipping otherwise.
inline QuadratureRule polygon_quadrature(std::span<const Point> poly, const Point& centroid,
                                         int order) {
  QuadratureRule r;
  const std::size_t n = poly.size();
  if (fan_is_valid(poly, centroid)) {
    for (std::size_t i = 0; i < n; ++i)
      append_triangle_rule(centroid, poly[i], poly[(i + 1) % n], order, r);
  } else {
    for (const auto& t : ear_clip(poly)) {
      const Point c = (poly[t[0]] + poly[t[1]] + poly[t[2]]) / 3.0;
      append_triangle_rule(c, poly[t[0]], poly[t[1]], order, r);
      append_triangle_rule(c, poly[t[1]], poly[t[2]], order, r);
      append_triangle_rule(c, poly[t[2]], poly[t[0]], order, r);
    }
  }
  return r;
}

inline QuadratureRule polygon_quadrature(std::span<const Point> poly, int order) {
  return polygon_quadrature(poly, compute_geometry(poly).centroid, order);
}

}  // namespace vemflow
