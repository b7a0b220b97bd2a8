#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <span>
#include <vector>

#include "rnls/grid.hpp"

namespace rnls {

using Complex = std::complex<double>;
using Point = std::array<double, kMaxDim>;

/// Samples of a scalar function on a GridSpec, row-major.
template <typename T>
class GridField {
public:
  using value_type = T;

  GridField() = default;
  explicit GridField(const GridSpec& grid) : grid_(grid), values_(grid.size(), T{}) {}
  GridField(const GridSpec& grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw config_error("SizeMismatch", "value count does not match grid size");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }

  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Marks a field captured after numerical blowup, where non-finite
  /// entries are tolerated.
  bool blown_up() const noexcept { return blown_up_; }
  void set_blown_up(bool flag) noexcept { blown_up_ = flag; }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](const T& v) {
      if constexpr (std::is_same_v<T, Complex>)
        return std::isfinite(v.real()) && std::isfinite(v.imag());
      else
        return std::isfinite(v);
    });
  }

  GridField& operator*=(T s) noexcept {
    for (auto& v : values_) v *= s;
    return *this;
  }
  GridField& operator+=(const GridField& o) noexcept {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridField& operator-=(const GridField& o) noexcept {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }

  /// y += a*x
  void axpy(T a, const GridField& x) noexcept {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  }

private:
  GridSpec grid_{};
  std::vector<T> values_;
  bool blown_up_ = false;
};

using ComplexField = GridField<Complex>;
using RealField = GridField<double>;

template <typename T>
GridField<T> operator*(GridField<T> f, T s) {
  f *= s;
  return f;
}
template <typename T>
GridField<T> operator+(GridField<T> a, const GridField<T>& b) {
  a += b;
  return a;
}
template <typename T>
GridField<T> operator-(GridField<T> a, const GridField<T>& b) {
  a -= b;
  return a;
}

/// Calls fn(flat_index, x) for every node.
template <typename Fn>
void for_each_node(const GridSpec& g, Fn&& fn) {
  const std::size_t n0 = g.points[0];
  const std::size_t n1 = g.dim > 1 ? g.points[1] : 1;
  const std::size_t n2 = g.dim > 2 ? g.points[2] : 1;
  std::size_t flat = 0;
  Point x{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n0; ++i) {
    x[0] = g.coordinate(0, i);
    for (std::size_t j = 0; j < n1; ++j) {
      if (g.dim > 1) x[1] = g.coordinate(1, j);
      for (std::size_t k = 0; k < n2; ++k, ++flat) {
        if (g.dim > 2) x[2] = g.coordinate(2, k);
        fn(flat, x);
      }
    }
  }
}

/// Samples fn(x) on every node.
template <typename T = Complex, typename Fn>
GridField<T> sample(const GridSpec& g, Fn&& fn) {
  GridField<T> f(g);
  for_each_node(g, [&](std::size_t i, const Point& x) { f[i] = static_cast<T>(fn(x)); });
  return f;
}

/// Rectangle rule h_1...h_d * sum f, spectrally accurate for periodic or
/// rapidly decaying integrands.
template <typename T>
T integrate(const GridField<T>& f) {
  T s{};
  for (const auto& v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

/// <u, v> = integral of conj(u) v.
inline Complex inner(const ComplexField& u, const ComplexField& v) {
  Complex s{};
  for (std::size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * v[i];
  return s * u.grid().cell_volume();
}

inline double mass(const ComplexField& u) {
  double s = 0.0;
  for (const auto& v : u.values()) s += std::norm(v);
  return s * u.grid().cell_volume();
}

inline double max_abs(const ComplexField& u) {
  double m = 0.0;
  for (const auto& v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

inline RealField density(const ComplexField& u) {
  RealField r(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) r[i] = std::norm(u[i]);
  return r;
}

/// ||u||_q^q for q >= 1.
inline double lp_power(const ComplexField& u, double q) {
  double s = 0.0;
  for (const auto& v : u.values()) s += std::pow(std::abs(v), q);
  return s * u.grid().cell_volume();
}

inline ComplexField to_complex(const RealField& r) {
  ComplexField c(r.grid());
  for (std::size_t i = 0; i < r.size(); ++i) c[i] = r[i];
  return c;
}

/// max_i |u_i - v_i|
inline double max_difference(const ComplexField& u, const ComplexField& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
  return m;
}

}  // namespace rnls
