#pragma once

#include <string>

#include "rnls/params.hpp"
#include "rnls/spectral.hpp"

namespace rnls {

/// Square matrix of order dim <= 3, stored densely.
struct Matrix {
  int dim = 0;
  std::array<std::array<double, kMaxDim>, kMaxDim> a{};

  double operator()(int i, int j) const { return a[i][j]; }
  double& operator()(int i, int j) { return a[i][j]; }

  std::array<double, kMaxDim> apply(const Point& x) const {
    std::array<double, kMaxDim> y{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) y[i] += a[i][j] * x[j];
    return y;
  }

  bool is_skew() const {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (a[i][j] != -a[j][i]) return false;
    return true;
  }

  bool is_zero() const {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (a[i][j] != 0.0) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Potential and rotation

inline void check_grid_matches(const PhysParams& P, const GridSpec& g) {
  if (P.dim != g.dim)
    throw config_error("DimensionMismatch", "grid dimension " + std::to_string(g.dim) +
                                                " does not match parameter dimension " +
                                                std::to_string(P.dim));
}

/// V(x) = 1/2 sum_j sgn(gamma_j) gamma_j^2 x_j^2 at a single point.
inline double trap_potential(const PhysParams& P, const Point& x) {
  double v = 0.0;
  for (int j = 0; j < P.dim; ++j) {
    const double g = P.gamma[j];
    v += (g < 0.0 ? -1.0 : 1.0) * g * g * x[j] * x[j];
  }
  return 0.5 * v;
}

inline RealField build_potential(const PhysParams& P, const GridSpec& g) {
  check_grid_matches(P, g);
  return sample<double>(g, [&](const Point& x) { return trap_potential(P, x); });
}

/// Block-diagonal skew matrix with Omega_k sigma blocks, sigma = [[0,-1],[1,0]];
/// odd d leaves a zero last row and column.
inline Matrix rotation_matrix(const PhysParams& P) {
  if (P.dim < 2) throw config_error("RotationNeedsPlane", "rotation requires d >= 2");
  if (P.omega.size() != std::size_t(P.dim / 2))
    throw config_error("DimensionMismatch", "need floor(d/2) rotation speeds");
  Matrix M;
  M.dim = P.dim;
  for (int k = 0; k < P.dim / 2; ++k) {
    M(2 * k, 2 * k + 1) = -P.omega[k];
    M(2 * k + 1, 2 * k) = P.omega[k];
  }
  return M;
}

/// Zero matrix for d = 1, rotation_matrix otherwise.
inline Matrix magnetic_matrix(const PhysParams& P) {
  if (P.dim < 2) {
    Matrix M;
    M.dim = P.dim;
    return M;
  }
  return rotation_matrix(P);
}

/// i (M x).grad u with the spectral gradient.
inline ComplexField apply_magnetic(const ComplexField& u, const Matrix& M) {
  const GridSpec& g = u.grid();
  ComplexField out(g);
  if (M.is_zero()) return out;
  const auto grad = gradient_spectral(u);
  for_each_node(g, [&](std::size_t f, const Point& x) {
    const auto A = M.apply(x);
    Complex s{};
    for (int j = 0; j < g.dim; ++j) s += A[j] * grad[j][f];
    out[f] = Complex(0.0, 1.0) * s;
  });
  return out;
}

/// L_A psi = i (M x).grad psi. In 2D with M = Omega sigma this is
/// i Omega (x_1 d_2 - x_2 d_1) psi = i Omega d_theta psi.
inline ComplexField apply_rotation(const ComplexField& psi, const PhysParams& P) {
  check_grid_matches(P, psi.grid());
  return apply_magnetic(psi, rotation_matrix(P));
}

/// (grad - i M x) u, one field per axis.
inline std::vector<ComplexField> magnetic_gradient(const ComplexField& u, const Matrix& M) {
  auto grad = gradient_spectral(u);
  if (M.is_zero()) return grad;
  for_each_node(u.grid(), [&](std::size_t f, const Point& x) {
    const auto A = M.apply(x);
    for (int j = 0; j < u.grid().dim; ++j) grad[j][f] -= Complex(0.0, A[j]) * u[f];
  });
  return grad;
}

// ---------------------------------------------------------------------------
// Nonlinearity N(u) = mu |u|^{p-1} u, G(|u|^2) = 2 mu/(p+1) |u|^{p+1}

inline double nonlinear_energy_density(double rho, const PhysParams& P) {
  if (P.mu == 0.0 || rho <= 0.0) return 0.0;
  return 2.0 * P.mu / (P.p + 1.0) * std::pow(rho, 0.5 * (P.p + 1.0));
}

inline RealField nonlinear_energy_density(const RealField& rho, const PhysParams& P) {
  RealField out(rho.grid());
  for (std::size_t i = 0; i < rho.size(); ++i) out[i] = nonlinear_energy_density(rho[i], P);
  return out;
}

/// Pointwise factor of the nonlinear force, mu |u|^{p-1} as a function of |u|^2.
inline double nonlinear_potential(double rho, const PhysParams& P) {
  if (P.mu == 0.0 || rho <= 0.0) return 0.0;
  if (P.p == 3.0) return P.mu * rho;
  return P.mu * std::pow(rho, 0.5 * (P.p - 1.0));
}

// ---------------------------------------------------------------------------
// Energies and norms

struct EnergyBreakdown {
  double kinetic = 0.0;        // 1/2 int |grad psi|^2
  double potential = 0.0;      // int V |psi|^2
  double rotation = 0.0;       // Re int conj(psi) L_A psi
  double nonlinear = 0.0;      // int G(|psi|^2)
  double total = 0.0;
  double rotation_imag = 0.0;  // discarded imaginary part of the rotation term
  double tail_fraction = 0.0;
  bool resolved = true;        // tail_fraction <= 1%
};

inline constexpr double kResolutionTail = 0.01;

inline EnergyBreakdown energy_breakdown(const ComplexField& psi, const PhysParams& P) {
  check_grid_matches(P, psi.grid());
  EnergyBreakdown E;
  const GridSpec& g = psi.grid();
  E.kinetic = 0.5 * gradient_norm_sq(psi);
  const double dv = g.cell_volume();
  double pot = 0.0, nl = 0.0;
  for_each_node(g, [&](std::size_t f, const Point& x) {
    const double rho = std::norm(psi[f]);
    pot += trap_potential(P, x) * rho;
    nl += nonlinear_energy_density(rho, P);
  });
  E.potential = pot * dv;
  E.nonlinear = nl * dv;
  if (P.dim >= 2 && P.rotating()) {
    const Complex r = inner(psi, apply_rotation(psi, P));
    E.rotation = r.real();
    E.rotation_imag = r.imag();
  }
  E.total = E.kinetic + E.potential + E.rotation + E.nonlinear;
  E.tail_fraction = tail_fraction(psi);
  E.resolved = E.tail_fraction <= kResolutionTail;
  return E;
}

struct Norms {
  double mass = 0.0;          // ||u||_2^2
  double lp = 0.0;            // ||u||_{p+1}
  double grad = 0.0;          // ||grad u||_2
  double magnetic_grad = 0.0; // ||(grad - i A) u||_2
  double sigma = 0.0;         // (int |grad_A u|^2 + |V||u|^2 + |u|^2)^{1/2}
};

inline Norms norms(const ComplexField& u, const PhysParams& P) {
  check_grid_matches(P, u.grid());
  Norms n;
  n.mass = mass(u);
  n.lp = std::pow(lp_power(u, P.p + 1.0), 1.0 / (P.p + 1.0));
  n.grad = std::sqrt(gradient_norm_sq(u));
  const auto gA = magnetic_gradient(u, magnetic_matrix(P));
  double ga = 0.0;
  for (const auto& c : gA) ga += mass(c);
  n.magnetic_grad = std::sqrt(ga);
  double vw = 0.0;
  for_each_node(u.grid(), [&](std::size_t f, const Point& x) {
    vw += std::abs(trap_potential(P, x)) * std::norm(u[f]);
  });
  vw *= u.grid().cell_volume();
  n.sigma = std::sqrt(ga + vw + n.mass);
  return n;
}

/// Sigma_{A,V} inner product: int grad_A u . conj(grad_A v) + |V| u conj(v) + u conj(v),
/// returned as int conj(u)(...)v.
inline Complex sigma_inner(const ComplexField& u, const ComplexField& v, const PhysParams& P) {
  const Matrix M = magnetic_matrix(P);
  const auto gu = magnetic_gradient(u, M);
  const auto gv = magnetic_gradient(v, M);
  Complex s{};
  for (std::size_t j = 0; j < gu.size(); ++j) s += inner(gu[j], gv[j]);
  Complex w{};
  for_each_node(u.grid(), [&](std::size_t f, const Point& x) {
    w += (1.0 + std::abs(trap_potential(P, x))) * std::conj(u[f]) * v[f];
  });
  return s + w * u.grid().cell_volume();
}

// ---------------------------------------------------------------------------
// Gauge transform for linear potentials A = C x

/// e^{i omega(x)} u with omega(x) = 1/2 x^T C x.
inline ComplexField gauge_transform(const ComplexField& u, const Matrix& C) {
  if (C.dim != u.grid().dim) throw config_error("DimensionMismatch", "gauge matrix order differs from grid");
  // Only the symmetric part contributes; using it makes skew C exact.
  Matrix S;
  S.dim = C.dim;
  for (int i = 0; i < C.dim; ++i)
    for (int j = 0; j < C.dim; ++j) S(i, j) = 0.5 * (C(i, j) + C(j, i));
  ComplexField out(u.grid());
  for_each_node(u.grid(), [&](std::size_t f, const Point& x) {
    const auto Sx = S.apply(x);
    double w = 0.0;
    for (int j = 0; j < C.dim; ++j) w += x[j] * Sx[j];
    w *= 0.5;
    out[f] = u[f] * (w == 0.0 ? Complex(1.0, 0.0) : std::polar(1.0, w));
  });
  return out;
}

/// max |(grad - i C x)(e^{i omega} u) - e^{i omega} grad u| for a Gaussian u.
inline double gauge_identity_error(const GridSpec& g, const Matrix& C, double width = 1.0) {
  const ComplexField u = sample(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int j = 0; j < g.dim; ++j) r2 += x[j] * x[j];
    return Complex(std::exp(-0.5 * r2 / (width * width)), 0.0);
  });
  const ComplexField v = gauge_transform(u, C);
  const auto lhs = magnetic_gradient(v, C);
  const auto grad = gradient_spectral(u);
  double err = 0.0;
  for (int j = 0; j < g.dim; ++j)
    for (std::size_t f = 0; f < u.size(); ++f) {
      const Complex phase = u[f] != Complex(0.0) ? v[f] / u[f] : Complex(1.0, 0.0);
      err = std::max(err, std::abs(lhs[j][f] - phase * grad[j][f]));
    }
  return err;
}

// ---------------------------------------------------------------------------
// Existence / non-existence regimes

enum class RegimeKind { Existence, NonExistence, Boundary };

struct Regime {
  RegimeKind kind = RegimeKind::Boundary;
  char clause = 0;  // 'a' (fast rotation) or 'b' (repulsive axis) for NonExistence
  std::string detail;

  std::string label() const {
    switch (kind) {
      case RegimeKind::Existence: return "Existence";
      case RegimeKind::Boundary: return "Boundary";
      case RegimeKind::NonExistence: return std::string("NonExistence(") + clause + ")";
    }
    return "?";
  }
};

/// NonExistence(b) if some gamma_j < 0; NonExistence(a) if some
/// |Omega_k| > min(gamma_{2k-1}, gamma_{2k}); Existence if every gamma_j > 0
/// and every |Omega_k| is strictly below its pair minimum; Boundary otherwise.
inline Regime classify_regime(const PhysParams& P) {
  P.validate();
  for (int j = 0; j < P.dim; ++j) {
    if (P.gamma[j] < 0.0)
      return {RegimeKind::NonExistence, 'b', "gamma_" + std::to_string(j + 1) + " < 0 (repulsive axis)"};
  }
  for (int k = 0; k < P.dim / 2; ++k) {
    const double lo = std::min(P.gamma[2 * k], P.gamma[2 * k + 1]);
    if (std::abs(P.omega[k]) > lo)
      return {RegimeKind::NonExistence, 'a',
              "|Omega_" + std::to_string(k + 1) + "| exceeds min(gamma_" + std::to_string(2 * k + 1) +
                  ", gamma_" + std::to_string(2 * k + 2) + ")"};
  }
  for (int j = 0; j < P.dim; ++j)
    if (P.gamma[j] == 0.0) return {RegimeKind::Boundary, 0, "gamma_" + std::to_string(j + 1) + " = 0"};
  for (int k = 0; k < P.dim / 2; ++k) {
    const double lo = std::min(P.gamma[2 * k], P.gamma[2 * k + 1]);
    if (std::abs(P.omega[k]) == lo)
      return {RegimeKind::Boundary, 0, "|Omega_" + std::to_string(k + 1) + "| equals its trap minimum"};
  }
  return {RegimeKind::Existence, 0, "confining trap, sub-critical rotation"};
}

/// Mass threshold multiplier C0^{-d/4} ||Q0||_2.
inline double threshold_mass(const PhysParams& P, double q0_norm) {
  if (!(P.c0 > 0.0)) throw config_error("NonPositiveC0", "C0 must be positive");
  if (!(q0_norm > 0.0)) throw config_error("NonPositiveNorm", "||Q0||_2 must be positive");
  return std::pow(P.c0, -P.dim / 4.0) * q0_norm;
}

}  // namespace rnls
