#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rnls/model.hpp"

namespace rnls {

/// Exact-substep Strang splitting for
///   i psi_t = -1/2 Lap psi + V psi + mu |psi|^{p-1} psi + L_A psi.
///
/// Pointwise part: psi <- psi exp(-i tau (V + mu |psi|^{p-1})), exact since
/// |psi| is invariant under it. Axis part j: i psi_t = -1/2 d_j^2 psi +
/// i (Mx)_j d_j psi, exact in the transform along axis j with multiplier
/// exp(-i tau (k_j^2/2 - (Mx)_j k_j)); (Mx)_j does not depend on x_j since
/// M is skew.
///
/// One step of length dt is the symmetric composition
///   P(dt/2) X_1(dt/2) ... X_{d-1}(dt/2) X_d(dt) X_{d-1}(dt/2) ... X_1(dt/2) P(dt/2),
/// which is second order even though the rotation parts of different axes
/// do not commute.
class SplitStepPropagator {
public:
  SplitStepPropagator(const GridSpec& grid, const PhysParams& params, double dt)
      : grid_(grid), params_(params), dt_(dt), plans_(fft_plans(grid)) {
    check_grid_matches(params, grid);
    if (!(dt != 0.0) || !std::isfinite(dt)) throw config_error("InvalidTimeStep", "dt must be finite and nonzero");
    potential_ = build_potential(params, grid);
    const Matrix M = magnetic_matrix(params);
    const int d = grid.dim;
    for (int axis = 0; axis < d - 1; ++axis) sweep_.push_back({axis, 0.5, -1, {}});
    sweep_.push_back({d - 1, 1.0, -1, {}});
    for (int axis = d - 2; axis >= 0; --axis) sweep_.push_back({axis, 0.5, -1, {}});
    for (auto& sub : sweep_) build_table(sub, M);
  }

  double dt() const noexcept { return dt_; }
  const GridSpec& grid() const noexcept { return grid_; }
  const PhysParams& params() const noexcept { return params_; }

  /// Advances psi by n steps. Adjacent pointwise half steps are fused, which
  /// is exact because |psi| is unchanged by them.
  void advance(ComplexField& psi, std::size_t n) const {
    if (n == 0) return;
    pointwise(psi, 0.5 * dt_);
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& sub : sweep_) axis_flow(psi, sub);
      pointwise(psi, s + 1 < n ? dt_ : 0.5 * dt_);
    }
  }

  void step(ComplexField& psi) const { advance(psi, 1); }

private:
  struct Substep {
    int axis;
    double fraction;
    int partner = -1;  // axis whose coordinate enters (Mx)_axis, or -1
    std::vector<Complex> table;  // [k index][partner coordinate index]
  };

  void build_table(Substep& sub, const Matrix& M) {
    const int j = sub.axis;
    for (int q = 0; q < grid_.dim; ++q)
      if (q != j && M(j, q) != 0.0) {
        if (sub.partner >= 0) throw config_error("UnsupportedMagneticMatrix", "axis couples to several coordinates");
        sub.partner = q;
      }
    const std::size_t nk = grid_.points[j];
    const std::size_t np = sub.partner >= 0 ? grid_.points[sub.partner] : 1;
    const double tau = sub.fraction * dt_;
    const double norm = 1.0 / double(nk);
    sub.table.resize(nk * np);
    for (std::size_t ik = 0; ik < nk; ++ik) {
      const double k = grid_.wavenumber(j, ik);
      const double kd = derivative_wavenumber(grid_, j, ik);
      for (std::size_t ip = 0; ip < np; ++ip) {
        const double a = sub.partner >= 0 ? M(j, sub.partner) * grid_.coordinate(sub.partner, ip) : 0.0;
        const double phase = -tau * (0.5 * k * k - a * kd);
        sub.table[ik * np + ip] = std::polar(norm, phase);
      }
    }
  }

  void axis_flow(ComplexField& psi, const Substep& sub) const {
    plans_->forward_axis(sub.axis, psi.values());
    const int j = sub.axis;
    const std::size_t np = sub.partner >= 0 ? grid_.points[sub.partner] : 1;
    const int partner = sub.partner;
    for_each_index(grid_, [&](std::size_t f, const auto& idx) {
      const std::size_t ip = partner >= 0 ? idx[partner] : 0;
      psi[f] *= sub.table[idx[j] * np + ip];
    });
    plans_->inverse_axis(sub.axis, psi.values(), false);
  }

  void pointwise(ComplexField& psi, double tau) const {
    for (std::size_t f = 0; f < psi.size(); ++f) {
      const double w = potential_[f] + nonlinear_potential(std::norm(psi[f]), params_);
      psi[f] *= Complex(std::cos(tau * w), -std::sin(tau * w));
    }
  }

  GridSpec grid_;
  PhysParams params_;
  double dt_;
  std::shared_ptr<const FftPlans> plans_;
  RealField potential_;
  std::vector<Substep> sweep_;
};

/// One Strang step of length dt (builds a propagator; prefer
/// SplitStepPropagator for repeated steps).
inline ComplexField step_strang(const ComplexField& psi, double dt, const PhysParams& params) {
  ComplexField out = psi;
  SplitStepPropagator(psi.grid(), params, dt).step(out);
  return out;
}

// ---------------------------------------------------------------------------
// Monitoring and blowup detection

enum class VerdictKind { Global, Blowup, Unresolved };

struct Verdict {
  VerdictKind kind = VerdictKind::Global;
  double time = 0.0;  // detection time (Blowup) or first unresolved sample (Unresolved)

  std::string label() const {
    switch (kind) {
      case VerdictKind::Global: return "Global";
      case VerdictKind::Blowup: return "Blowup";
      case VerdictKind::Unresolved: return "Unresolved";
    }
    return "?";
  }
};

struct BlowupCriteria {
  double grad_growth = 5.0;   // grad_norm >= grad_growth * grad_norm[0]
  double linf_growth = 5.0;   // linf >= linf_growth * linf[0]
  double tail = kResolutionTail;  // tail_fraction > tail
};

struct EvolutionTrace {
  std::vector<double> times, mass, energy, grad_norm, linf, lz, tail_fraction;
  Verdict verdict;

  std::size_t size() const { return times.size(); }

  void push(double t, const ComplexField& psi, const PhysParams& P) {
    const auto E = energy_breakdown(psi, P);
    times.push_back(t);
    mass.push_back(rnls::mass(psi));
    energy.push_back(E.total);
    grad_norm.push_back(std::sqrt(2.0 * E.kinetic));
    linf.push_back(max_abs(psi));
    lz.push_back(E.rotation);
    tail_fraction.push_back(E.tail_fraction);
  }

  /// CSV with columns t, mass, energy, grad_norm, linf, lz, tail_fraction.
  void write_csv(std::ostream& os) const {
    os << "t,mass,energy,grad_norm,linf,lz,tail_fraction\n";
    char buf[512];
    for (std::size_t i = 0; i < size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", times[i], mass[i], energy[i],
                    grad_norm[i], linf[i], lz[i], tail_fraction[i]);
      os << buf;
    }
  }
};

namespace detail {

inline bool blowup_at(const EvolutionTrace& tr, std::size_t i, const BlowupCriteria& c) {
  return tr.grad_norm[i] >= c.grad_growth * tr.grad_norm[0] && tr.linf[i] >= c.linf_growth * tr.linf[0] &&
         tr.tail_fraction[i] > c.tail;
}

}  // namespace detail

/// Blowup at the first sample meeting all three criteria; otherwise
/// Unresolved at the first sample whose tail exceeds the threshold;
/// otherwise Global.
inline Verdict detect_blowup(const EvolutionTrace& tr, const BlowupCriteria& c = {}) {
  if (tr.size() == 0) throw config_error("EmptyTrace", "trace has no samples");
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (detail::blowup_at(tr, i, c)) return {VerdictKind::Blowup, tr.times[i]};
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.tail_fraction[i] > c.tail) return {VerdictKind::Unresolved, tr.times[i]};
  return {VerdictKind::Global, tr.times.back()};
}

struct EvolveOptions {
  double T = 2.0;
  double dt = 1e-3;
  std::size_t sample_every = 10;
  BlowupCriteria criteria{};
  /// Called on every sample, after the monitors are recorded.
  std::function<void(double, const ComplexField&)> observer;
};

struct EvolutionResult {
  EvolutionTrace trace;
  ComplexField initial;
  ComplexField final_state;
  double final_time = 0.0;
  std::size_t steps = 0;
};

/// Steps psi0 to T (or until blowup is detected), recording monitors every
/// sample_every steps and at the end.
inline EvolutionResult evolve(const ComplexField& psi0, const PhysParams& params, const EvolveOptions& opt = {}) {
  if (!(opt.T > 0.0)) throw config_error("InvalidHorizon", "T must be positive");
  if (!(std::abs(opt.dt) > 0.0)) throw config_error("InvalidTimeStep", "dt must be nonzero");
  if (opt.sample_every == 0) throw config_error("InvalidSampling", "sample_every must be positive");
  const auto total = std::size_t(std::llround(opt.T / std::abs(opt.dt)));
  const double sign = opt.dt > 0 ? 1.0 : -1.0;
  const SplitStepPropagator prop(psi0.grid(), params, opt.dt);

  EvolutionResult res;
  res.initial = psi0;
  ComplexField psi = psi0;
  auto record = [&](std::size_t step) {
    const double t = sign * double(step) * std::abs(opt.dt);
    res.trace.push(t, psi, params);
    if (opt.observer) opt.observer(t, psi);
  };
  record(0);
  std::size_t step = 0;
  bool blown = false;
  while (step < total) {
    const std::size_t n = std::min(opt.sample_every, total - step);
    prop.advance(psi, n);
    step += n;
    record(step);
    if (detail::blowup_at(res.trace, res.trace.size() - 1, opt.criteria) || !psi.all_finite()) {
      blown = true;
      break;
    }
  }
  res.trace.verdict = detect_blowup(res.trace, opt.criteria);
  if (blown && res.trace.verdict.kind != VerdictKind::Blowup)
    res.trace.verdict = {VerdictKind::Blowup, res.trace.times.back()};
  psi.set_blown_up(res.trace.verdict.kind == VerdictKind::Blowup);
  res.final_time = res.trace.times.back();
  res.steps = step;
  res.final_state = std::move(psi);
  return res;
}

// ---------------------------------------------------------------------------
// Blowup rate

struct BlowupRateFit {
  double exponent = 0.0;     // kappa in grad_norm ~ (T+ - t)^kappa
  double blowup_time = 0.0;  // T+
  double prefactor = 0.0;    // exp(intercept)
  double rms_residual = 0.0; // in log space
  std::size_t samples = 0;
};

namespace detail {

struct LineFit {
  double slope, intercept, sse;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  const double slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  const double intercept = (sy - slope * sx) / n;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - slope * x[i] - intercept;
    sse += r * r;
  }
  return {slope, intercept, sse};
}

}  // namespace detail

/// Least-squares fit of log g = kappa log(T+ - t) + b over the final decade
/// of growth of g(t), with T+ > t_last chosen to minimize the residual.
inline BlowupRateFit fit_blowup_rate(std::span<const double> times, std::span<const double> g,
                                     std::size_t min_samples = 10) {
  if (times.size() != g.size() || times.empty())
    throw numerical_error("InsufficientSamples", "no samples to fit");
  const double g_last = g.back();
  std::size_t first = times.size() - 1;
  while (first > 0 && g[first - 1] >= g_last / 10.0 && g[first - 1] <= g[first]) --first;
  const std::size_t n = times.size() - first;
  if (n < min_samples)
    throw numerical_error("InsufficientSamples", "only " + std::to_string(n) + " samples in the final decade of growth");

  std::vector<double> lg(n), lx(n);
  for (std::size_t i = 0; i < n; ++i) lg[i] = std::log(g[first + i]);
  const double t_last = times.back();
  const double span = std::max(t_last - times[first], 1e-300);
  auto sse_at = [&](double delta) {
    for (std::size_t i = 0; i < n; ++i) lx[i] = std::log(t_last + delta - times[first + i]);
    return detail::fit_line(lx, lg);
  };

  // log-spaced scan of delta = T+ - t_last, then golden-section refinement
  double best_log = 0.0, best = std::numeric_limits<double>::infinity();
  const double lo = std::log(span * 1e-9), hi = std::log(span * 10.0);
  const int scan = 400;
  for (int i = 0; i <= scan; ++i) {
    const double ld = lo + (hi - lo) * i / scan;
    const double s = sse_at(std::exp(ld)).sse;
    if (s < best) {
      best = s;
      best_log = ld;
    }
  }
  const double step = (hi - lo) / scan;
  double a = best_log - step, b = best_log + step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = sse_at(std::exp(c)).sse, fd = sse_at(std::exp(d)).sse;
  for (int it = 0; it < 100; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = sse_at(std::exp(c)).sse;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = sse_at(std::exp(d)).sse;
    }
  }
  const double delta = std::exp(0.5 * (a + b));
  const auto fit = sse_at(delta);
  return {fit.slope, t_last + delta, std::exp(fit.intercept), std::sqrt(fit.sse / double(n)), n};
}

/// Rate fit for a trace that ended in Blowup, using grad_norm up to the
/// detection time.
inline BlowupRateFit fit_blowup_rate(const EvolutionTrace& tr) {
  if (tr.verdict.kind != VerdictKind::Blowup)
    throw numerical_error("InsufficientSamples", "trace did not end in blowup");
  std::size_t end = 0;
  while (end < tr.size() && tr.times[end] <= tr.verdict.time) ++end;
  return fit_blowup_rate(std::span<const double>(tr.times.data(), end),
                         std::span<const double>(tr.grad_norm.data(), end));
}

}  // namespace rnls
