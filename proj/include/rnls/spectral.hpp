#pragma once

#include <vector>

#include "rnls/fft.hpp"

namespace rnls {

/// Unnormalized forward transform of u.
inline ComplexField to_spectrum(ComplexField u) {
  fft_plans(u.grid())->forward(u.values());
  return u;
}

/// Inverse of to_spectrum (includes the 1/prod N factor).
inline ComplexField from_spectrum(ComplexField uh) {
  fft_plans(uh.grid())->inverse(uh.values());
  return uh;
}

/// Wavenumber used for first derivatives: the Nyquist mode has no
/// well-defined odd derivative on a periodic grid and is mapped to zero.
inline double derivative_wavenumber(const GridSpec& g, int axis, std::size_t i) {
  if (i == g.points[axis] / 2) return 0.0;
  return g.wavenumber(axis, i);
}

/// Per-axis derivative wavenumber tables in FFT order.
inline std::array<std::vector<double>, kMaxDim> derivative_tables(const GridSpec& g) {
  std::array<std::vector<double>, kMaxDim> t;
  for (int j = 0; j < g.dim; ++j) {
    t[j].resize(g.points[j]);
    for (std::size_t i = 0; i < g.points[j]; ++i) t[j][i] = derivative_wavenumber(g, j, i);
  }
  return t;
}

/// Calls fn(flat, idx) over the multi-indices of the grid.
template <typename Fn>
void for_each_index(const GridSpec& g, Fn&& fn) {
  const std::size_t n0 = g.points[0];
  const std::size_t n1 = g.dim > 1 ? g.points[1] : 1;
  const std::size_t n2 = g.dim > 2 ? g.points[2] : 1;
  std::size_t flat = 0;
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      for (std::size_t k = 0; k < n2; ++k, ++flat) fn(flat, std::array<std::size_t, kMaxDim>{i, j, k});
}

/// d components of the spectral gradient, each ifft((i k_j) fft(u)).
inline std::vector<ComplexField> gradient_spectral(const ComplexField& u) {
  const GridSpec& g = u.grid();
  const auto plans = fft_plans(g);
  ComplexField uh = u;
  plans->forward(uh.values());
  const auto kt = derivative_tables(g);
  std::vector<ComplexField> out;
  out.reserve(std::size_t(g.dim));
  for (int axis = 0; axis < g.dim; ++axis) {
    ComplexField d(g);
    for_each_index(g, [&](std::size_t f, const auto& idx) {
      d[f] = Complex(0.0, kt[axis][idx[axis]]) * uh[f];
    });
    plans->inverse(d.values());
    out.push_back(std::move(d));
  }
  return out;
}

/// Spectral Laplacian with the full -|k|^2 symbol.
inline ComplexField laplacian(const ComplexField& u) {
  const GridSpec& g = u.grid();
  const auto plans = fft_plans(g);
  ComplexField uh = u;
  plans->forward(uh.values());
  for_each_index(g, [&](std::size_t f, const auto& idx) {
    double k2 = 0.0;
    for (int j = 0; j < g.dim; ++j) {
      const double k = g.wavenumber(j, idx[j]);
      k2 += k * k;
    }
    uh[f] *= -k2;
  });
  plans->inverse(uh.values());
  return uh;
}

/// Integral of |grad u|^2, evaluated by Parseval with the derivative
/// wavenumbers (so it equals the sum of squared norms of gradient_spectral).
inline double gradient_norm_sq(const ComplexField& u) {
  const GridSpec& g = u.grid();
  const ComplexField uh = to_spectrum(u);
  const auto kt = derivative_tables(g);
  double s = 0.0;
  for_each_index(g, [&](std::size_t f, const auto& idx) {
    double k2 = 0.0;
    for (int j = 0; j < g.dim; ++j) k2 += kt[j][idx[j]] * kt[j][idx[j]];
    s += k2 * std::norm(uh[f]);
  });
  return s * g.cell_volume() / double(g.size());
}

/// Mass computed in transform space, h^d/N * sum |u_hat|^2.
inline double spectral_mass(const ComplexField& u) {
  const ComplexField uh = to_spectrum(u);
  double s = 0.0;
  for (const auto& v : uh.values()) s += std::norm(v);
  return s * u.grid().cell_volume() / double(u.grid().size());
}

/// Share of the kinetic spectrum sum |k|^2 |u_hat|^2 carried by modes with
/// |k_j| above two thirds of the Nyquist wavenumber on any axis. Values
/// near zero mean the field is resolved.
inline double tail_fraction(const ComplexField& u) {
  const GridSpec& g = u.grid();
  const ComplexField uh = to_spectrum(u);
  double total = 0.0, tail = 0.0;
  for_each_index(g, [&](std::size_t f, const auto& idx) {
    double k2 = 0.0;
    bool outer = false;
    for (int j = 0; j < g.dim; ++j) {
      const double k = g.wavenumber(j, idx[j]);
      k2 += k * k;
      if (std::abs(k) > (2.0 / 3.0) * g.nyquist(j)) outer = true;
    }
    const double e = k2 * std::norm(uh[f]);
    total += e;
    if (outer) tail += e;
  });
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace rnls
