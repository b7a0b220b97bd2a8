#pragma once

#include <algorithm>
#include <mutex>
#include <ostream>
#include <thread>

#include "rnls/dynamics.hpp"
#include "rnls/gradient_flow.hpp"
#include "rnls/radial.hpp"

namespace rnls {

/// Which ground state is scaled to build initial data.
enum class QSource { FreeQ0, TrappedQ };

inline std::string to_string(QSource s) { return s == QSource::FreeQ0 ? "FreeQ0" : "TrappedQ"; }

/// Reference profile Q: the lifted free ground state (FreeQ0) or the
/// unit-mass trapped minimizer from the gradient flow (TrappedQ).
inline ComplexField reference_profile(QSource source, const PhysParams& P, const GridSpec& g,
                                      const GradientFlowOptions& flow = {}) {
  check_grid_matches(P, g);
  if (source == QSource::FreeQ0) {
    const auto prof = shoot_free_ground_state(P.dim, P.p, grid_radius(g));
    return lift_to_grid(prof, g, 1.0);
  }
  return gradient_flow(P, trap_gaussian(g, P, 1.0), 1.0, flow).field;
}

/// Initial datum for multiplier c: c Q (AmplitudeScale) or c Q / ||Q||_2 (MassScale).
inline ComplexField scaled_initial(const ComplexField& Q, double c, ScaleConvention scale) {
  ComplexField psi = Q;
  double s = c;
  if (scale == ScaleConvention::MassScale) s /= std::sqrt(mass(Q));
  psi *= Complex(s, 0.0);
  return psi;
}

struct ThresholdRun {
  double c = 0.0;
  Verdict verdict;
  double final_grad_norm = 0.0;
  double final_linf = 0.0;
};

/// Evolves the scaled datum and reports the verdict.
inline ThresholdRun classify_run(double c, const ComplexField& Q, const PhysParams& P, const EvolveOptions& opt = {}) {
  const auto res = evolve(scaled_initial(Q, c, P.scale), P, opt);
  return {c, res.trace.verdict, res.trace.grad_norm.back(), res.trace.linf.back()};
}

struct ThresholdResult {
  PhysParams params;
  QSource source = QSource::TrappedQ;
  double c_global = 0.0;
  double c_blowup = 0.0;
  double c_thresh = 0.0;
  std::vector<ThresholdRun> runs;  // in evaluation order
  bool indeterminate = false;      // non-monotone or unresolved verdicts
  std::string note;

  double width() const { return c_blowup - c_global; }
};

namespace detail {

/// Flags any Global verdict above a Blowup verdict, or any Unresolved run.
inline void check_monotone(ThresholdResult& r) {
  for (const auto& a : r.runs) {
    if (a.verdict.kind == VerdictKind::Unresolved) {
      r.indeterminate = true;
      r.note = "unresolved run at c = " + std::to_string(a.c);
      return;
    }
    for (const auto& b : r.runs)
      if (a.verdict.kind == VerdictKind::Global && b.verdict.kind == VerdictKind::Blowup && a.c > b.c) {
        r.indeterminate = true;
        r.note = "Global at c = " + std::to_string(a.c) + " above Blowup at c = " + std::to_string(b.c);
        return;
      }
  }
}

}  // namespace detail

/// Bisection on c between a Global endpoint c_lo and a Blowup endpoint c_hi.
inline ThresholdResult bisect_threshold(const ComplexField& Q, QSource source, const PhysParams& P, double c_lo,
                                        double c_hi, double tol_c, const EvolveOptions& opt = {}) {
  if (!(c_lo < c_hi)) throw config_error("InvalidBracket", "need c_lo < c_hi");
  if (!(tol_c > 0.0)) throw config_error("InvalidTolerance", "tol_c must be positive");
  ThresholdResult r;
  r.params = P;
  r.source = source;
  auto run = [&](double c) {
    r.runs.push_back(classify_run(c, Q, P, opt));
    return r.runs.back().verdict.kind;
  };
  const auto lo = run(c_lo);
  const auto hi = run(c_hi);
  if (lo != VerdictKind::Global || hi != VerdictKind::Blowup)
    throw config_error("InvalidBracket", "endpoints do not straddle: c_lo gives " + r.runs[0].verdict.label() +
                                             ", c_hi gives " + r.runs[1].verdict.label());
  r.c_global = c_lo;
  r.c_blowup = c_hi;
  while (r.c_blowup - r.c_global > tol_c) {
    const double mid = 0.5 * (r.c_global + r.c_blowup);
    const auto v = run(mid);
    if (v == VerdictKind::Global)
      r.c_global = mid;
    else if (v == VerdictKind::Blowup)
      r.c_blowup = mid;
    else
      break;
  }
  r.c_thresh = 0.5 * (r.c_global + r.c_blowup);
  detail::check_monotone(r);
  return r;
}

struct CriticalComparison {
  double c_thresh_sq = 0.0;
  double q0_mass = 0.0;
  double excess = 0.0;  // (c_thresh^2 - M(Q0)) / M(Q0)
};

inline CriticalComparison compare_to_critical(double c_thresh, double q0_mass) {
  if (!(q0_mass > 0.0)) throw config_error("NonPositiveNorm", "M(Q0) must be positive");
  return {c_thresh * c_thresh, q0_mass, (c_thresh * c_thresh - q0_mass) / q0_mass};
}

inline CriticalComparison compare_to_critical(const ThresholdResult& r, double q0_mass) {
  return compare_to_critical(r.c_thresh, q0_mass);
}

/// Classifies every c on `workers` threads; results come back sorted by c.
inline std::vector<ThresholdRun> classify_sweep(const std::vector<double>& cs, const ComplexField& Q,
                                                const PhysParams& P, const EvolveOptions& opt, unsigned workers) {
  workers = std::max(1u, std::min<unsigned>(workers, unsigned(cs.size())));
  std::vector<ThresholdRun> out;
  std::mutex mtx;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto work = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (next >= cs.size() || failure) return;
        i = next++;
      }
      try {
        auto run = classify_run(cs[i], Q, P, opt);
        std::lock_guard<std::mutex> lock(mtx);
        out.push_back(run);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::sort(out.begin(), out.end(), [](const ThresholdRun& a, const ThresholdRun& b) { return a.c < b.c; });
  return out;
}

/// CSV with columns c, verdict, t_detect, final_grad_norm, final_linf.
/// t_detect is empty for Global runs.
inline void write_runs_csv(std::ostream& os, const std::vector<ThresholdRun>& runs) {
  os << "c,verdict,t_detect,final_grad_norm,final_linf\n";
  char buf[256];
  for (const auto& r : runs) {
    std::string t;
    if (r.verdict.kind != VerdictKind::Global) {
      std::snprintf(buf, sizeof buf, "%.12g", r.verdict.time);
      t = buf;
    }
    std::snprintf(buf, sizeof buf, "%.12g,%s,%s,%.17g,%.17g\n", r.c, r.verdict.label().c_str(), t.c_str(),
                  r.final_grad_norm, r.final_linf);
    os << buf;
  }
}

/// One-line summary: bracket and midpoint.
inline std::string summary_line(const ThresholdResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "bracket=(%.6f,%.6f) c_thresh=%.6f runs=%zu%s", r.c_global, r.c_blowup, r.c_thresh,
                r.runs.size(), r.indeterminate ? " Indeterminate" : "");
  return buf;
}

// ---------------------------------------------------------------------------
// Orbital stability probe

/// inf over theta of ||psi - e^{i theta} Q||_Sigma.
inline double orbit_distance(const ComplexField& psi, const ComplexField& Q, const PhysParams& P) {
  const double a = sigma_inner(psi, psi, P).real();
  const double b = sigma_inner(Q, Q, P).real();
  const double c = std::abs(sigma_inner(Q, psi, P));
  return std::sqrt(std::max(0.0, a + b - 2.0 * c));
}

struct StabilityProbe {
  double initial_distance = 0.0;  // ||delta eta||_Sigma
  double max_distance = 0.0;      // max over samples of the orbit distance
  double max_ratio = 0.0;         // max_distance / initial_distance
  std::vector<double> times, distances;
  Verdict verdict;
};

/// Evolves Q + delta eta with a random smooth eta normalized so that
/// ||delta eta||_Sigma = rel ||Q||_Sigma and records the orbit distance at
/// every trace sample.
inline StabilityProbe stability_probe(const ComplexField& Q, const PhysParams& P, double rel, EvolveOptions opt,
                                      std::uint64_t seed = 1) {
  if (!(rel > 0.0)) throw config_error("InvalidPerturbation", "perturbation size must be positive");
  std::mt19937_64 rng(seed);
  ComplexField eta = random_smooth_field(Q.grid(), P, 1.0, rng);
  const double scale = rel * std::sqrt(sigma_inner(Q, Q, P).real()) / std::sqrt(sigma_inner(eta, eta, P).real());
  eta *= Complex(scale, 0.0);
  ComplexField psi0 = Q;
  for (std::size_t i = 0; i < psi0.size(); ++i) psi0[i] += eta[i];

  StabilityProbe out;
  out.initial_distance = std::sqrt(sigma_inner(eta, eta, P).real());
  auto user = opt.observer;
  opt.observer = [&](double t, const ComplexField& psi) {
    const double d = orbit_distance(psi, Q, P);
    out.times.push_back(t);
    out.distances.push_back(d);
    out.max_distance = std::max(out.max_distance, d);
    if (user) user(t, psi);
  };
  const auto res = evolve(psi0, P, opt);
  out.verdict = res.trace.verdict;
  out.max_ratio = out.max_distance / out.initial_distance;
  return out;
}

}  // namespace rnls
