#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "rnls/model.hpp"

namespace rnls {

/// Positive radial decaying solution of -1/2 Lap u + u - u^p = 0 on R^d,
/// sampled on r_i = i h for r_i <= r_max.
struct RadialProfile {
  int dim = 2;
  double p = 3.0;
  double r_max = 0.0;
  double h = 0.0;
  std::vector<double> values;
  double center_value = 0.0;
  double mass = 0.0;    // omega_{d-1} int u^2 r^{d-1} dr, i.e. ||Q0||_2^2 on R^d
  double cutoff = 0.0;  // radius beyond which the decaying asymptotic tail is used
  int bisections = 0;

  double norm() const { return std::sqrt(mass); }

  /// Monotone (Fritsch-Carlson) cubic interpolation in r.
  double operator()(double r) const {
    r = std::abs(r);
    if (r >= r_max) return values.back();
    const std::size_t n = values.size();
    const std::size_t i = std::min(std::size_t(r / h), n - 2);
    const double t = (r - double(i) * h) / h;
    auto secant = [&](std::size_t k) { return values[k + 1] - values[k]; };
    auto slope = [&](std::size_t k) {
      // derivative estimate at node k, in units of one step
      if (k == 0) return 0.0;  // u'(0) = 0
      if (k + 1 >= n) return secant(k - 1);
      const double a = secant(k - 1), b = secant(k);
      if (a * b <= 0.0) return 0.0;
      return 2.0 * a * b / (a + b);
    };
    const double y0 = values[i], y1 = values[i + 1];
    const double m0 = slope(i), m1 = slope(i + 1);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
  }
};

/// Surface measure of the unit sphere S^{d-1} (2 for d = 1).
inline double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
  }
  throw config_error("InvalidDimension", "d must be 1, 2 or 3");
}

struct ShootingOptions {
  double h = 1e-4;
  double r_max = 20.0;
};

namespace detail {

enum class ShotOutcome { Overshoot, Undershoot, Undetermined };

struct RadialOde {
  int d;
  double p;

  // u'' = 2(u - |u|^{p-1}u) - (d-1)/r u'
  std::array<double, 2> rhs(double r, double u, double v) const {
    const double f = 2.0 * (u - std::pow(std::abs(u), p - 1.0) * u);
    if (r == 0.0) return {v, f / double(d)};
    return {v, f - double(d - 1) / r * v};
  }

  void rk4(double r, double h, double& u, double& v) const {
    const auto k1 = rhs(r, u, v);
    const auto k2 = rhs(r + 0.5 * h, u + 0.5 * h * k1[0], v + 0.5 * h * k1[1]);
    const auto k3 = rhs(r + 0.5 * h, u + 0.5 * h * k2[0], v + 0.5 * h * k2[1]);
    const auto k4 = rhs(r + h, u + h * k3[0], v + h * k3[1]);
    u += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    v += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
};

// u crossing zero means the centre value was too large; u' turning positive
// while u is still positive means it was too small.
inline ShotOutcome shoot_once(const RadialOde& ode, double a, const ShootingOptions& opt) {
  double u = a, v = 0.0;
  const auto steps = std::size_t(std::llround(opt.r_max / opt.h));
  for (std::size_t i = 0; i < steps; ++i) {
    ode.rk4(double(i) * opt.h, opt.h, u, v);
    if (u < 0.0) return ShotOutcome::Overshoot;
    if (v > 0.0 && u > 1e-12) return ShotOutcome::Undershoot;
  }
  return ShotOutcome::Undetermined;
}

}  // namespace detail

/// Bisection shooting on u(0) for u'' + (d-1)/r u' = 2(u - u^p), u'(0) = 0.
inline RadialProfile shoot_radial(int d, double p, double a_lo, double a_hi, double tol,
                                  const ShootingOptions& opt = {}) {
  if (d < 1 || d > 3) throw config_error("InvalidDimension", "d must be 1, 2 or 3");
  if (!(p > 1.0)) throw config_error("InvalidExponent", "p must exceed 1");
  if (d >= 3 && !(p < 1.0 + 4.0 / (d - 2)))
    throw config_error("InvalidExponent", "p must be energy-subcritical");
  if (!(a_lo > 0.0 && a_hi > a_lo)) throw config_error("InvalidBracket", "need 0 < a_lo < a_hi");
  if (!(tol > 0.0)) throw config_error("InvalidTolerance", "tolerance must be positive");

  using detail::ShotOutcome;
  const detail::RadialOde ode{d, p};
  const auto lo = detail::shoot_once(ode, a_lo, opt);
  const auto hi = detail::shoot_once(ode, a_hi, opt);
  if (lo == ShotOutcome::Undetermined || hi == ShotOutcome::Undetermined)
    throw numerical_error("StepTooCoarse", "shooting dichotomy not resolved before r_max");
  if (lo != ShotOutcome::Undershoot || hi != ShotOutcome::Overshoot)
    throw config_error("BracketDoesNotStraddle", "centre-value bracket does not straddle the ground state");

  RadialProfile prof;
  prof.dim = d;
  prof.p = p;
  prof.h = opt.h;
  double lo_a = a_lo, hi_a = a_hi;
  while (hi_a - lo_a >= tol) {
    const double mid = 0.5 * (lo_a + hi_a);
    if (mid <= lo_a || mid >= hi_a) break;  // bracket at floating-point resolution
    const auto outcome = detail::shoot_once(ode, mid, opt);
    if (outcome == ShotOutcome::Undetermined)
      throw numerical_error("StepTooCoarse", "shooting dichotomy not resolved before r_max");
    (outcome == ShotOutcome::Overshoot ? hi_a : lo_a) = mid;
    ++prof.bisections;
  }

  // March both bracket ends together; the profile is trusted until they
  // separate, then continued with the decaying linear mode r^{-nu} K_nu(sqrt2 r),
  // nu = |d-2|/2.
  const auto steps = std::size_t(std::llround(opt.r_max / opt.h));
  prof.values.assign(steps + 1, 0.0);
  double u1 = lo_a, v1 = 0.0, u2 = hi_a, v2 = 0.0;
  prof.values[0] = 0.5 * (lo_a + hi_a);
  std::size_t cut = steps;
  for (std::size_t i = 0; i < steps; ++i) {
    const double r = double(i) * opt.h;
    ode.rk4(r, opt.h, u1, v1);
    ode.rk4(r, opt.h, u2, v2);
    const double u = 0.5 * (u1 + u2);
    const bool split = std::abs(u2 - u1) > 1e-6 * std::abs(u);
    if (split || u1 <= 0.0 || u2 <= 0.0 || v1 >= 0.0 || v2 >= 0.0) {
      cut = i;
      break;
    }
    prof.values[i + 1] = u;
  }
  prof.cutoff = double(cut) * opt.h;
  const double uc = prof.values[cut];
  const double rc = std::max(prof.cutoff, opt.h);
  const double nu = 0.5 * std::abs(d - 2);
  auto decaying = [&](double r) {
    return std::pow(r, -0.5 * (d - 2)) * std::cyl_bessel_k(nu, std::numbers::sqrt2 * r);
  };
  const double ref = decaying(rc);
  for (std::size_t i = cut + 1; i <= steps; ++i) {
    const double r = double(i) * opt.h;
    prof.values[i] = uc * decaying(r) / ref;
  }
  prof.r_max = double(steps) * opt.h;
  prof.center_value = prof.values[0];

  // Composite Simpson on u^2 r^{d-1}; the sample count is made odd.
  std::size_t n = prof.values.size();
  if (n % 2 == 0) --n;
  auto integrand = [&](std::size_t i) {
    const double r = double(i) * opt.h;
    return prof.values[i] * prof.values[i] * std::pow(r, d - 1);
  };
  double s = integrand(0) + integrand(n - 1);
  for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(i);
  prof.mass = sphere_area(d) * s * opt.h / 3.0;
  return prof;
}

/// Default bracket [0.5, 4] ([0.5, 8] in 3D), bisected to near machine
/// resolution, with r_max enlarged to cover a grid of the given radius.
inline RadialProfile shoot_free_ground_state(int d, double p, double cover_radius = 0.0) {
  ShootingOptions opt;
  opt.r_max = std::max(opt.r_max, std::ceil(cover_radius + 1.0));
  return shoot_radial(d, p, 0.5, d == 3 ? 8.0 : 4.0, 1e-14, opt);
}

/// Mass-critical free ground state Q0 for dimension d (p = 1 + 4/d).
inline RadialProfile free_ground_state(int d, double cover_radius = 0.0) {
  return shoot_free_ground_state(d, 1.0 + 4.0 / d, cover_radius);
}

/// Largest |x| on the grid.
inline double grid_radius(const GridSpec& g) {
  double s = 0.0;
  for (int j = 0; j < g.dim; ++j) s += g.half_width[j] * g.half_width[j];
  return std::sqrt(s);
}

/// c u(|x|) sampled on the grid (AmplitudeScale, mass c^2 M(Q0)), or the
/// same profile renormalized to mass c^2 (MassScale).
inline ComplexField lift_to_grid(const RadialProfile& prof, const GridSpec& g, double c,
                                 ScaleConvention scale = ScaleConvention::AmplitudeScale) {
  if (g.dim != prof.dim) throw config_error("DimensionMismatch", "profile and grid dimensions differ");
  if (grid_radius(g) > prof.r_max)
    throw config_error("GridExceedsProfile", "grid corner lies beyond the radial profile extent");
  ComplexField f = sample(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int j = 0; j < g.dim; ++j) r2 += x[j] * x[j];
    return Complex(c * prof(std::sqrt(r2)), 0.0);
  });
  if (scale == ScaleConvention::MassScale && c != 0.0) {
    const double m = mass(f);
    f *= Complex(std::abs(c) / std::sqrt(m), 0.0);
  }
  return f;
}

}  // namespace rnls
