#pragma once

#include "vemflow/common.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace vemflow {

/// Per-cell geometric quantities.
struct ElementGeometry {
  double diameter = 0.0;  // h_E
  double area = 0.0;      // |E|
  Point centroid = Point::Zero();
  std::vector<double> edge_lengths;
};

inline double signed_area(std::span<const Point> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

namespace detail {

inline int orientation_sign(const Point& a, const Point& b, const Point& c, double tol) {
  const double v = cross2(b - a, c - a);
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d,
                               double tol) {
  const int o1 = orientation_sign(a, b, c, tol);
  const int o2 = orientation_sign(a, b, d, tol);
  const int o3 = orientation_sign(c, d, a, tol);
  const int o4 = orientation_sign(c, d, b, tol);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace detail

/// True when the closed polyline has no self-intersections and no repeated points.
inline bool is_simple_polygon(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  double scale = 0.0;
  for (const auto& p : poly) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = 1e-14 * std::max(scale * scale, 1e-300);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((poly[i] - poly[j]).norm() <= 1e-14 * std::max(scale, 1e-300)) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // adjacent edges share a vertex by construction
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      const Point& c = poly[j];
      const Point& d = poly[(j + 1) % n];
      if (detail::segments_intersect(a, b, c, d, tol)) return false;
    }
  }
  if (std::abs(signed_area(poly)) <= tol) return false;
  return true;
}

inline bool is_convex_polygon(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  const double s = signed_area(poly) > 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const Point& c = poly[(i + 2) % n];
    if (s * cross2(b - a, c - b) < -1e-14 * (b - a).squaredNorm()) return false;
  }
  return true;
}

/// Shoelace area, area-weighted centroid, max vertex distance. Expects a CCW loop.
inline ElementGeometry compute_geometry(std::span<const Point> poly) {
  ElementGeometry g;
  const std::size_t n = poly.size();
  double a = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    const double w = p.x() * q.y() - q.x() * p.y();
    a += w;
    c += w * (p + q);
  }
  a *= 0.5;
  g.area = a;
  g.centroid = c / (6.0 * a);
  for (std::size_t i = 0; i < n; ++i) {
    g.edge_lengths.push_back((poly[(i + 1) % n] - poly[i]).norm());
    for (std::size_t j = i + 1; j < n; ++j)
      g.diameter = std::max(g.diameter, (poly[i] - poly[j]).norm());
  }
  return g;
}

}  // namespace vemflow
