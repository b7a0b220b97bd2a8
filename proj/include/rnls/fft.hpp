#pragma once

#include <fftw3.h>

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rnls/field.hpp"

namespace rnls {

namespace detail {

// The FFTW planner is not thread-safe; plan execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// FFTW plans for one grid shape: the full d-dimensional transform and the
/// one-dimensional transform along each axis (batched over the others).
///
/// Convention: forward is unnormalized with e^{-ikx}; inverse carries the
/// 1/N factor. All plans are in-place and built with FFTW_ESTIMATE so the
/// arithmetic order is reproducible run to run.
class FftPlans {
public:
  explicit FftPlans(const GridSpec& grid) : grid_(grid) {
    std::vector<Complex> scratch(grid.size());
    auto* buf = detail::as_fftw(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

    std::lock_guard lock(detail::planner_mutex());
    std::array<int, kMaxDim> n{};
    for (int j = 0; j < grid.dim; ++j) n[j] = int(grid.points[j]);
    full_fwd_ = fftw_plan_dft(grid.dim, n.data(), buf, buf, FFTW_FORWARD, flags);
    full_inv_ = fftw_plan_dft(grid.dim, n.data(), buf, buf, FFTW_BACKWARD, flags);

    for (int axis = 0; axis < grid.dim; ++axis) {
      fftw_iodim dim{int(grid.points[axis]), int(grid.stride(axis)), int(grid.stride(axis))};
      std::array<fftw_iodim, kMaxDim> many{};
      int howmany = 0;
      for (int j = 0; j < grid.dim; ++j) {
        if (j == axis) continue;
        many[howmany++] = fftw_iodim{int(grid.points[j]), int(grid.stride(j)), int(grid.stride(j))};
      }
      axis_fwd_[axis] = fftw_plan_guru_dft(1, &dim, howmany, many.data(), buf, buf, FFTW_FORWARD, flags);
      axis_inv_[axis] = fftw_plan_guru_dft(1, &dim, howmany, many.data(), buf, buf, FFTW_BACKWARD, flags);
    }
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  ~FftPlans() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(full_fwd_);
    fftw_destroy_plan(full_inv_);
    for (int axis = 0; axis < grid_.dim; ++axis) {
      fftw_destroy_plan(axis_fwd_[axis]);
      fftw_destroy_plan(axis_inv_[axis]);
    }
  }

  void forward(std::span<Complex> data) const {
    auto* p = detail::as_fftw(data.data());
    fftw_execute_dft(full_fwd_, p, p);
  }

  void inverse(std::span<Complex> data) const {
    auto* p = detail::as_fftw(data.data());
    fftw_execute_dft(full_inv_, p, p);
    const double s = 1.0 / double(grid_.size());
    for (auto& v : data) v *= s;
  }

  void forward_axis(int axis, std::span<Complex> data) const {
    auto* p = detail::as_fftw(data.data());
    fftw_execute_dft(axis_fwd_[axis], p, p);
  }

  /// Inverse along one axis; leaves the 1/N_axis factor to the caller when
  /// `normalize` is false so it can be folded into a multiplier table.
  void inverse_axis(int axis, std::span<Complex> data, bool normalize = true) const {
    auto* p = detail::as_fftw(data.data());
    fftw_execute_dft(axis_inv_[axis], p, p);
    if (normalize) {
      const double s = 1.0 / double(grid_.points[axis]);
      for (auto& v : data) v *= s;
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }

private:
  GridSpec grid_;
  fftw_plan full_fwd_ = nullptr;
  fftw_plan full_inv_ = nullptr;
  std::array<fftw_plan, kMaxDim> axis_fwd_{};
  std::array<fftw_plan, kMaxDim> axis_inv_{};
};

/// Shared plan set for the grid's shape, created on first use.
inline std::shared_ptr<const FftPlans> fft_plans(const GridSpec& grid) {
  using Key = std::array<std::size_t, kMaxDim + 1>;
  static std::mutex cache_mutex;
  static std::map<Key, std::shared_ptr<const FftPlans>> cache;
  Key key{std::size_t(grid.dim), 1, 1, 1};
  for (int j = 0; j < grid.dim; ++j) key[j + 1] = grid.points[j];
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) {
    // Plans depend only on the shape; the stored GridSpec may carry another
    // half width, so callers must take L from their own grid.
    return it->second;
  }
  auto plans = std::make_shared<const FftPlans>(grid);
  cache.emplace(key, plans);
  return plans;
}

}  // namespace rnls
