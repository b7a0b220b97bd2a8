#pragma once

#include <cmath>
#include <random>

#include "rnls/model.hpp"

namespace rnls {

/// int_R y^{2n} e^{-alpha y^2} dy = Gamma(n + 1/2) / alpha^{n + 1/2}.
inline double gaussian_moment(double n, double alpha) {
  if (!(n > -0.5)) throw config_error("DomainError", "gaussian_moment needs n > -1/2");
  if (!(alpha > 0.0)) throw config_error("DomainError", "gaussian_moment needs alpha > 0");
  const double a = n + 0.5;
  const double g = std::tgamma(a);
  const double p = std::pow(alpha, a);
  if (std::isfinite(g) && std::isfinite(p) && p > 0.0) return g / p;
  return std::exp(std::lgamma(a) - a * std::log(alpha));
}

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool satisfied = false;
};

inline InequalityReport make_report(double lhs, double rhs, double tol) {
  if (!(rhs > 0.0)) throw config_error("ZeroField", "inequality right-hand side vanishes");
  InequalityReport r{lhs, rhs, lhs / rhs, false};
  r.satisfied = r.ratio <= 1.0 + tol;
  return r;
}

/// Sharp constant (d + 2) / (2 d ||Q0||_2^{4/d}).
inline double gn_constant(int d, double q0_norm) {
  return (d + 2.0) / (2.0 * d * std::pow(q0_norm, 4.0 / d));
}

/// ||u||_{p+1}^{p+1} <= C_GN ||grad_A u||_2^2 ||u||_2^{4/d} at p = 1 + 4/d,
/// with A = M x taken from params.
inline InequalityReport check_gn(const ComplexField& u, const PhysParams& P, double q0_norm, double tol = 1e-10) {
  check_grid_matches(P, u.grid());
  if (!P.mass_critical()) throw config_error("NotMassCritical", "check_gn needs p = 1 + 4/d");
  const double m = mass(u);
  if (!(m > 0.0)) throw config_error("ZeroField", "check_gn of a zero field");
  const double lhs = lp_power(u, P.p + 1.0);
  const auto gA = magnetic_gradient(u, magnetic_matrix(P));
  double ga = 0.0;
  for (const auto& c : gA) ga += mass(c);
  const double rhs = gn_constant(P.dim, q0_norm) * ga * std::pow(m, 2.0 / P.dim);
  return make_report(lhs, rhs, tol);
}

/// ||grad |u|_eps||_2 <= ||(grad - i M x) u||_2. The modulus is used as is
/// when it stays away from zero, otherwise sqrt(|u|^2 + eps^2) with
/// eps = 1e-8 max|u|.
inline InequalityReport check_diamagnetic(const ComplexField& u, const Matrix& M, double tol = 1e-6) {
  if (M.dim != u.grid().dim) throw config_error("DimensionMismatch", "matrix order differs from grid");
  const double top = max_abs(u);
  if (!(top > 0.0)) throw config_error("ZeroField", "check_diamagnetic of a zero field");
  double low = std::numeric_limits<double>::infinity();
  for (const auto& v : u.values()) low = std::min(low, std::abs(v));
  const double eps = low > 1e-10 * top ? 0.0 : 1e-8 * top;
  ComplexField modulus(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) modulus[i] = Complex(std::sqrt(std::norm(u[i]) + eps * eps), 0.0);
  const double lhs = std::sqrt(gradient_norm_sq(modulus));
  double ga = 0.0;
  for (const auto& c : magnetic_gradient(u, M)) ga += mass(c);
  return make_report(lhs, std::sqrt(ga), tol);
}

/// Gaussian-enveloped random field: exp(-|x|^2 / (2 w^2)) times a random
/// band-limited complex modulation.
inline ComplexField random_enveloped_field(const GridSpec& g, std::mt19937_64& rng, int modes = 6) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> width(0.7, 2.0);
  const double w = width(rng);
  std::vector<std::pair<Point, Complex>> ms;
  for (int i = 0; i < modes; ++i) {
    Point k{};
    for (int j = 0; j < g.dim; ++j) k[j] = n01(rng);
    ms.push_back({k, Complex(n01(rng), n01(rng))});
  }
  return sample(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int j = 0; j < g.dim; ++j) r2 += x[j] * x[j];
    Complex s{};
    for (const auto& [k, a] : ms) {
      double ph = 0.0;
      for (int j = 0; j < g.dim; ++j) ph += k[j] * x[j];
      s += a * std::polar(1.0, ph);
    }
    return s * std::exp(-0.5 * r2 / (w * w));
  });
}

}  // namespace rnls
