#pragma once

// Scaled monomial bases m_a(x) = prod_i ((x_i - c_i)/h)^{a_i} on elements and edges,
// exact differential calculus on their coefficient vectors, and L2 projection.
//
// Coefficient layout used across the library:
//   scalar  P_n     : dim(n) coefficients in graded lexicographic order
//   vector [P_n]^2  : [component 0 | component 1], 2*dim(n)
//   tensor [P_n]^2x2: [T00 | T01 | T10 | T11], 4*dim(n), T_ij = d_j v_i for gradients

#include "vemflow/common.hpp"
#include "vemflow/quadrature.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace vemflow {

/// Dimension of P_n in two variables; zero for n < 0.
constexpr int poly_dim(int n) { return n < 0 ? 0 : (n + 1) * (n + 2) / 2; }

struct MultiIndex {
  int a1 = 0;
  int a2 = 0;
  constexpr int degree() const { return a1 + a2; }
  friend constexpr bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Position of a multi-index in the graded lexicographic enumeration
/// (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
constexpr int monomial_index(MultiIndex a) {
  const int d = a.degree();
  return d * (d + 1) / 2 + a.a2;
}

inline std::vector<MultiIndex> multi_indices(int n) {
  std::vector<MultiIndex> out;
  for (int d = 0; d <= n; ++d)
    for (int a2 = 0; a2 <= d; ++a2) out.push_back({d - a2, a2});
  return out;
}

/// Scaled monomials centred at `center` with length scale `h`.
class ScaledMonomials {
 public:
  ScaledMonomials() = default;
  ScaledMonomials(Point center, double h, int degree)
      : center_(std::move(center)), h_(h), degree_(degree), indices_(multi_indices(degree)) {}

  const Point& center() const { return center_; }
  double scale() const { return h_; }
  int degree() const { return degree_; }
  int size() const { return poly_dim(degree_); }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  double eval(MultiIndex a, const Point& x) const {
    const Point s = (x - center_) / h_;
    return std::pow(s.x(), a.a1) * std::pow(s.y(), a.a2);
  }

  Vec values(const Point& x) const { return values(x, degree_); }

  /// Values of all monomials of degree <= n at x; empty for n < 0.
  Vec values(const Point& x, int n) const {
    Vec v(poly_dim(n));
    if (n < 0) return v;
    const Point s = (x - center_) / h_;
    std::vector<double> px(n + 1, 1.0), py(n + 1, 1.0);
    for (int i = 1; i <= n; ++i) {
      px[i] = px[i - 1] * s.x();
      py[i] = py[i - 1] * s.y();
    }
    int idx = 0;
    for (int d = 0; d <= n; ++d)
      for (int a2 = 0; a2 <= d; ++a2) v[idx++] = px[d - a2] * py[a2];
    return v;
  }

 private:
  Point center_ = Point::Zero();
  double h_ = 1.0;
  int degree_ = 0;
  std::vector<MultiIndex> indices_;
};

/// Scaled 1D monomials ((s - s_mid)/L)^j along an edge, s the arc length from `a`.
struct EdgeMonomials {
  Point a, b;
  int degree;

  double length() const { return (b - a).norm(); }
  Vec values(const Point& x) const {
    const double len = length();
    const double t = ((x - a).dot(b - a) / len - 0.5 * len) / len;
    Vec v(degree + 1);
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      v[j] = p;
      p *= t;
    }
    return v;
  }
};

// ---- calculus on coefficient vectors -------------------------------------------------

/// Partial derivative d/dx_dir as a dim(n-1) x dim(n) map: d m_a = (a_i / h) m_{a - e_i}.
inline Mat derivative_matrix(int n, int dir, double h) {
  Mat d = Mat::Zero(poly_dim(n - 1), poly_dim(n));
  for (const auto& a : multi_indices(n)) {
    const int ai = dir == 0 ? a.a1 : a.a2;
    if (ai == 0) continue;
    const MultiIndex lower = dir == 0 ? MultiIndex{a.a1 - 1, a.a2} : MultiIndex{a.a1, a.a2 - 1};
    d(monomial_index(lower), monomial_index(a)) = ai / h;
  }
  return d;
}

/// Scalar P_n -> vector [P_{n-1}]^2.
inline Mat grad_matrix(int n, double h) {
  const int m = poly_dim(n - 1);
  Mat g(2 * m, poly_dim(n));
  g.topRows(m) = derivative_matrix(n, 0, h);
  g.bottomRows(m) = derivative_matrix(n, 1, h);
  return g;
}

/// Vector [P_n]^2 -> scalar P_{n-1}.
inline Mat div_matrix(int n, double h) {
  const int m = poly_dim(n);
  Mat d(poly_dim(n - 1), 2 * m);
  d.leftCols(m) = derivative_matrix(n, 0, h);
  d.rightCols(m) = derivative_matrix(n, 1, h);
  return d;
}

/// Vector [P_n]^2 -> tensor [P_{n-1}]^{2x2}, T_ij = d_j v_i.
inline Mat vector_grad_matrix(int n, double h) {
  const int m = poly_dim(n), l = poly_dim(n - 1);
  const Mat dx = derivative_matrix(n, 0, h), dy = derivative_matrix(n, 1, h);
  Mat g = Mat::Zero(4 * l, 2 * m);
  g.block(0 * l, 0, l, m) = dx;
  g.block(1 * l, 0, l, m) = dy;
  g.block(2 * l, m, l, m) = dx;
  g.block(3 * l, m, l, m) = dy;
  return g;
}

/// Symmetric part of a tensor coefficient vector with block size l.
inline Mat symmetrize_matrix(int l) {
  Mat s = Mat::Zero(4 * l, 4 * l);
  const Mat id = Mat::Identity(l, l);
  s.block(0, 0, l, l) = id;
  s.block(l, l, l, l) = 0.5 * id;
  s.block(l, 2 * l, l, l) = 0.5 * id;
  s.block(2 * l, l, l, l) = 0.5 * id;
  s.block(2 * l, 2 * l, l, l) = 0.5 * id;
  s.block(3 * l, 3 * l, l, l) = id;
  return s;
}

/// Vector [P_n]^2 -> symmetric tensor [P_{n-1}]^{2x2}.
inline Mat symgrad_matrix(int n, double h) {
  return symmetrize_matrix(poly_dim(n - 1)) * vector_grad_matrix(n, h);
}

/// Scalar P_n -> P_{n-2}.
inline Mat laplacian_matrix(int n, double h) {
  return derivative_matrix(n - 1, 0, h) * derivative_matrix(n, 0, h) +
         derivative_matrix(n - 1, 1, h) * derivative_matrix(n, 1, h);
}

/// Multiplication by m_shift as a dim(n + |shift|) x dim(n) map.
inline Mat multiply_matrix(int n, MultiIndex shift) {
  Mat m = Mat::Zero(poly_dim(n + shift.degree()), poly_dim(n));
  for (const auto& a : multi_indices(n))
    m(monomial_index({a.a1 + shift.a1, a.a2 + shift.a2}), monomial_index(a)) = 1.0;
  return m;
}

/// Inclusion P_from -> P_to (to >= from); lower degrees are a prefix of the enumeration.
inline Mat embed_matrix(int from, int to) {
  Mat e = Mat::Zero(poly_dim(to), poly_dim(from));
  e.topLeftCorner(poly_dim(from), poly_dim(from)).setIdentity();
  return e;
}

/// Evaluate a tensor coefficient vector (block size dim(n)) at monomial values `mv`.
inline Tensor2 eval_tensor(const Vec& coeffs, const Vec& mv) {
  const long l = mv.size();
  Tensor2 t;
  t(0, 0) = coeffs.segment(0 * l, l).dot(mv);
  t(0, 1) = coeffs.segment(1 * l, l).dot(mv);
  t(1, 0) = coeffs.segment(2 * l, l).dot(mv);
  t(1, 1) = coeffs.segment(3 * l, l).dot(mv);
  return t;
}

inline Eigen::Vector2d eval_vector(const Vec& coeffs, const Vec& mv) {
  const long l = mv.size();
  return {coeffs.segment(0, l).dot(mv), coeffs.segment(l, l).dot(mv)};
}

// ---- projection ------------------------------------------------------------------------

/// Monomial Gram matrix G_ab = int m_a m_b over the rule.
inline Mat gram_matrix(const ScaledMonomials& basis, const QuadratureRule& rule) {
  const int n = basis.size();
  Mat g = Mat::Zero(n, n);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec v = basis.values(rule.points[q]);
    g.noalias() += rule.weights[q] * v * v.transpose();
  }
  return g;
}

/// Condition number estimate (inf-norm) of a small dense matrix.
inline double condition_estimate(const Mat& a) {
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  const Mat inv = lu.inverse();
  auto norm_inf = [](const Mat& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); };
  return norm_inf(a) * norm_inf(inv);
}

/// Result of an L2 projection onto P_n.
struct L2Projection {
  Vec coeffs;
  double gram_condition = 1.0;
};

/// L2 projection from values sampled at the rule's points.
inline L2Projection l2_project(const ScaledMonomials& basis, const QuadratureRule& rule,
                               const Vec& samples) {
  const Mat g = gram_matrix(basis, rule);
  Vec b = Vec::Zero(basis.size());
  for (std::size_t q = 0; q < rule.size(); ++q)
    b += rule.weights[q] * samples[static_cast<long>(q)] * basis.values(rule.points[q]);
  L2Projection out;
  out.coeffs = g.partialPivLu().solve(b);
  out.gram_condition = condition_estimate(g);
  return out;
}

/// L2 projection of a scalar function onto the basis using `rule` (order >= 2n + margin).
inline L2Projection l2_project(const ScaledMonomials& basis, const QuadratureRule& rule,
                               const ScalarField& f) {
  Vec samples(static_cast<long>(rule.size()));
  for (std::size_t q = 0; q < rule.size(); ++q) samples[static_cast<long>(q)] = f(rule.points[q]);
  return l2_project(basis, rule, samples);
}

}  // namespace vemflow
