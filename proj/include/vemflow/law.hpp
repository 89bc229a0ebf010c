#pragma once

// Carreau–Yasuda law  sigma(x, E) = mu(x) (delta^a + |E|^a)^((r-2)/a) E,  |E| Frobenius.

#include "vemflow/common.hpp"

#include <cmath>
#include <random>

namespace vemflow {

/// Strain-rate magnitude below which the degenerate (delta = 0) viscosity is capped.
inline constexpr double kViscosityFloor = 1e-8;

struct CarreauYasuda {
  ScalarField mu = [](const Point&) { return 1.0; };
  double mu_min = 1.0;  // declared bounds of mu
  double mu_max = 1.0;
  double delta = 0.0;
  double alpha = 2.0;
  double r = 2.0;

  double conjugate() const { return r / (r - 1.0); }
  /// Upper bound of the Hölder continuity constant.
  double sigma_c() const { return mu_max / (r - 1.0) * std::pow(2.0, (2.0 * r * (2.0 - r) + 1.0) / r); }
  /// Lower bound of the strong monotonicity constant.
  double sigma_m() const { return mu_min * (r - 1.0) * std::pow(2.0, (r - 1.0) * (r - 2.0) / r); }

  void validate() const {
    if (!mu) throw ConfigError("viscosity function is not set");
    if (!(mu_min > 0.0 && mu_min <= mu_max)) throw ConfigError("viscosity bounds need 0 < mu_min <= mu_max");
    if (!(delta >= 0.0)) throw ConfigError("delta must be non-negative");
    if (!(alpha >= 1.0)) throw ConfigError("alpha must be at least 1");
    if (!(r > 1.0 && r <= 2.0)) throw ConfigError("r must lie in (1, 2]");
  }
};

inline CarreauYasuda make_law(double r, double delta, double alpha, double mu = 1.0) {
  CarreauYasuda law;
  law.mu = [mu](const Point&) { return mu; };
  law.mu_min = law.mu_max = mu;
  law.r = r;
  law.delta = delta;
  law.alpha = alpha;
  law.validate();
  return law;
}

inline double frobenius(const Tensor2& t) { return t.norm(); }

inline Tensor2 stress(const CarreauYasuda& law, const Point& x, const Tensor2& e) {
  if (std::abs(e(0, 1) - e(1, 0)) > 1e-12 * std::max(1.0, e.cwiseAbs().maxCoeff()))
    throw ConfigError("stress expects a symmetric strain tensor");
  const double n = frobenius(e);
  if (n == 0.0) return Tensor2::Zero();
  const double a = law.alpha;
  return law.mu(x) * std::pow(std::pow(law.delta, a) + std::pow(n, a), (law.r - 2.0) / a) * e;
}

/// Picard coefficient mu(x) (delta^a + |Z|^a)^((r_eff-2)/a); the base is floored at
/// kViscosityFloor^a so the degenerate law stays finite at zero strain.
inline double viscosity(const CarreauYasuda& law, double r_eff, const Point& x, const Tensor2& z) {
  if (r_eff == 2.0) return law.mu(x);
  const double a = law.alpha;
  const double base = std::pow(law.delta, a) + std::pow(frobenius(z), a);
  return law.mu(x) * std::pow(std::max(base, std::pow(kViscosityFloor, a)), (r_eff - 2.0) / a);
}

inline bool viscosity_capped(const CarreauYasuda& law, const Tensor2& z) {
  const double a = law.alpha;
  return std::pow(law.delta, a) + std::pow(frobenius(z), a) < std::pow(kViscosityFloor, a);
}

struct Assumption1Report {
  std::size_t samples = 0;
  std::size_t continuity_violations = 0;
  std::size_t monotonicity_violations = 0;
  double worst_continuity_ratio = 0.0;    // lhs / rhs, must stay <= 1
  double worst_monotonicity_ratio = 0.0;  // rhs / lhs, must stay <= 1
  bool ok() const { return continuity_violations == 0 && monotonicity_violations == 0; }
};

/// Samples symmetric pairs (tau, eta) with log-uniform magnitudes over [1e-3, 1e3] and
/// checks Hölder continuity and strong monotonicity with sigma_c and sigma_m.
inline Assumption1Report check_assumption1(const CarreauYasuda& law, std::size_t n_samples,
                                           std::uint64_t seed) {
  law.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), lg(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  auto random_sym = [&] {
    Tensor2 t;
    t(0, 0) = u(rng);
    t(1, 1) = u(rng);
    t(0, 1) = t(1, 0) = u(rng);
    const double n = t.norm();
    return n > 0 ? Tensor2(t / n * std::pow(10.0, lg(rng))) : t;
  };
  Assumption1Report rep;
  const double r = law.r;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Tensor2 tau = random_sym();
    // half the pairs are close together to probe the local regime
    const Tensor2 eta = s % 2 == 0 ? random_sym() : Tensor2(tau + 1e-3 * random_sym());
    const Point x(pos(rng), pos(rng));
    const Tensor2 ds = stress(law, x, tau) - stress(law, x, eta);
    const Tensor2 d = tau - eta;
    const double dn = d.norm();
    if (dn == 0.0) continue;
    const double w = std::pow(std::pow(law.delta, r) + std::pow(tau.norm(), r) + std::pow(eta.norm(), r), (r - 2.0) / r);
    const double cont = ds.norm() / (law.sigma_c() * w * dn);
    const double mono = law.sigma_m() * w * dn * dn / (ds.cwiseProduct(d).sum());
    ++rep.samples;
    rep.worst_continuity_ratio = std::max(rep.worst_continuity_ratio, cont);
    rep.worst_monotonicity_ratio = std::max(rep.worst_monotonicity_ratio, mono);
    if (cont > 1.0 + 1e-12) ++rep.continuity_violations;
    if (!(mono <= 1.0 + 1e-12)) ++rep.monotonicity_violations;
  }
  return rep;
}

}  // namespace vemflow
