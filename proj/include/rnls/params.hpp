#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rnls/error.hpp"
#include "rnls/grid.hpp"

namespace rnls {

/// How a multiplier c acts on a reference profile Q.
///   AmplitudeScale: psi0 = c Q, so M(psi0) = c^2 M(Q).
///   MassScale:      psi0 = c Q / ||Q||_2, so M(psi0) = c^2.
enum class ScaleConvention { AmplitudeScale, MassScale };

inline std::string to_string(ScaleConvention s) {
  return s == ScaleConvention::AmplitudeScale ? "AmplitudeScale" : "MassScale";
}

/// Physical parameters of
///   i psi_t = -1/2 Lap psi + V_gamma psi + mu |psi|^{p-1} psi + L_A psi,
/// with V_gamma(x) = 1/2 sum_j sgn(gamma_j) gamma_j^2 x_j^2, L_A = i (M x).grad
/// and M block-diagonal with Omega_k sigma blocks.
struct PhysParams {
  int dim = 2;
  double p = 3.0;
  double mu = -1.0;
  std::vector<double> omega;  // floor(d/2) rotation speeds
  std::vector<double> gamma;  // d signed trap strengths
  double c0 = 1.0;            // nonlinearity bound constant
  ScaleConvention scale = ScaleConvention::AmplitudeScale;

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw config_error("InvalidDimension", "d must be 1, 2 or 3");
    if (!(p > 1.0)) throw config_error("InvalidExponent", "nonlinearity exponent p must exceed 1");
    if (!std::isfinite(mu)) throw config_error("InvalidCoupling", "mu must be finite");
    if (omega.size() != std::size_t(dim / 2))
      throw config_error("DimensionMismatch", "need floor(d/2) rotation speeds");
    if (gamma.size() != std::size_t(dim))
      throw config_error("DimensionMismatch", "need d trap strengths");
    for (double w : omega)
      if (!std::isfinite(w)) throw config_error("InvalidRotation", "rotation speeds must be finite");
    for (double g : gamma)
      if (!std::isfinite(g)) throw config_error("InvalidTrap", "trap strengths must be finite");
  }

  bool rotating() const {
    for (double w : omega)
      if (w != 0.0) return true;
    return false;
  }

  /// Mass-critical exponent 1 + 4/d.
  bool mass_critical() const { return std::abs(p - (1.0 + 4.0 / dim)) < 1e-12; }
};

/// Convenience: 2D mass-critical focusing parameters with one rotation speed.
inline PhysParams planar_params(double omega, double gamma1, double gamma2, double mu = -1.0) {
  PhysParams P;
  P.dim = 2;
  P.p = 3.0;
  P.mu = mu;
  P.omega = {omega};
  P.gamma = {gamma1, gamma2};
  return P;
}

}  // namespace rnls
