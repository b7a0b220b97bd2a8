#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>

#include "rnls/error.hpp"

namespace rnls {

inline constexpr int kMaxDim = 3;

/// Uniform periodic tensor grid on the box [-L_1, L_1) x ... x [-L_d, L_d).
///
/// Axis 0 is the slowest-varying index (row-major). Node i on axis j sits at
/// x = -L_j + i*h_j with h_j = 2 L_j / N_j. Wavenumbers are stored in FFT
/// order: n = 0, 1, ..., N/2-1, -N/2, ..., -1 and k = pi n / L.
struct GridSpec {
  int dim = 0;
  std::array<double, kMaxDim> half_width{1.0, 1.0, 1.0};
  std::array<std::size_t, kMaxDim> points{1, 1, 1};

  std::size_t size() const noexcept {
    std::size_t n = 1;
    for (int j = 0; j < dim; ++j) n *= points[j];
    return n;
  }

  double spacing(int axis) const noexcept { return 2.0 * half_width[axis] / double(points[axis]); }

  double coordinate(int axis, std::size_t i) const noexcept {
    return -half_width[axis] + double(i) * spacing(axis);
  }

  /// Wavenumber of FFT-ordered index i along `axis`.
  double wavenumber(int axis, std::size_t i) const noexcept {
    const auto n = static_cast<long>(points[axis]);
    long s = static_cast<long>(i);
    if (s >= n / 2) s -= n;
    return std::numbers::pi * double(s) / half_width[axis];
  }

  /// Largest resolved |k| along `axis` (the Nyquist wavenumber).
  double nyquist(int axis) const noexcept {
    return std::numbers::pi * double(points[axis] / 2) / half_width[axis];
  }

  /// Distance in the flat array between neighbours along `axis`.
  std::size_t stride(int axis) const noexcept {
    std::size_t s = 1;
    for (int j = axis + 1; j < dim; ++j) s *= points[j];
    return s;
  }

  double cell_volume() const noexcept {
    double v = 1.0;
    for (int j = 0; j < dim; ++j) v *= spacing(j);
    return v;
  }

  /// Multi-index of flat index `flat`.
  std::array<std::size_t, kMaxDim> unflatten(std::size_t flat) const noexcept {
    std::array<std::size_t, kMaxDim> idx{0, 0, 0};
    for (int j = dim - 1; j >= 0; --j) {
      idx[j] = flat % points[j];
      flat /= points[j];
    }
    return idx;
  }

  bool operator==(const GridSpec& other) const noexcept {
    if (dim != other.dim) return false;
    for (int j = 0; j < dim; ++j)
      if (points[j] != other.points[j] || half_width[j] != other.half_width[j]) return false;
    return true;
  }
};

/// Validated grid constructor. Every axis needs an even power-of-two point
/// count of at least 8 and a positive half width.
inline GridSpec make_grid(int dim, std::span<const double> half_width,
                          std::span<const std::size_t> points) {
  if (dim < 1 || dim > kMaxDim)
    throw config_error("InvalidDimension", "grid dimension must be 1, 2 or 3");
  if (half_width.size() != std::size_t(dim) || points.size() != std::size_t(dim))
    throw config_error("DimensionMismatch", "need one half width and one point count per axis");
  GridSpec g;
  g.dim = dim;
  for (int j = 0; j < dim; ++j) {
    const std::size_t n = points[j];
    if (n % 2 != 0)
      throw config_error("OddPointCount", "point count " + std::to_string(n) + " is odd");
    if (n < 8)
      throw config_error("TooFewPoints", "point count " + std::to_string(n) + " is below 8");
    if ((n & (n - 1)) != 0)
      throw config_error("NotPowerOfTwo", "point count " + std::to_string(n) + " is not a power of two");
    if (!(half_width[j] > 0.0) || !std::isfinite(half_width[j]))
      throw config_error("NonPositiveHalfWidth", "half width must be positive and finite");
    g.half_width[j] = half_width[j];
    g.points[j] = n;
  }
  return g;
}

/// Cubic grid with the same L and N on every axis.
inline GridSpec make_grid(int dim, double half_width, std::size_t points) {
  std::array<double, kMaxDim> L{half_width, half_width, half_width};
  std::array<std::size_t, kMaxDim> N{points, points, points};
  if (dim < 1 || dim > kMaxDim)
    throw config_error("InvalidDimension", "grid dimension must be 1, 2 or 3");
  return make_grid(dim, std::span<const double>(L.data(), std::size_t(dim)),
                   std::span<const std::size_t>(N.data(), std::size_t(dim)));
}

}  // namespace rnls
