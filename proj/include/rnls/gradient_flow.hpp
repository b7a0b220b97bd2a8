#pragma once

#include <functional>
#include <optional>
#include <random>

#include "rnls/model.hpp"
#include "rnls/radial.hpp"

namespace rnls {

/// Action of the full Hamiltonian on phi:
///   -1/2 Lap phi + V phi + L_A phi + mu |phi|^{p-1} phi.
/// The linear part is returned separately so energies come for free.
struct HamiltonianAction {
  ComplexField linear;  // (-1/2 Lap + V + L_A) phi
  ComplexField full;    // linear + mu |phi|^{p-1} phi
};

inline HamiltonianAction apply_hamiltonian(const ComplexField& phi, const PhysParams& P, const RealField& V) {
  HamiltonianAction h;
  h.linear = laplacian(phi);
  h.linear *= Complex(-0.5, 0.0);
  for (std::size_t f = 0; f < phi.size(); ++f) h.linear[f] += V[f] * phi[f];
  if (P.dim >= 2 && P.rotating()) h.linear += apply_rotation(phi, P);
  h.full = h.linear;
  for (std::size_t f = 0; f < phi.size(); ++f) h.full[f] += nonlinear_potential(std::norm(phi[f]), P) * phi[f];
  return h;
}

inline HamiltonianAction apply_hamiltonian(const ComplexField& phi, const PhysParams& P) {
  return apply_hamiltonian(phi, P, build_potential(P, phi.grid()));
}

/// Chemical potential with the sign of -lambda u = H u: lambda = -<H phi, phi> / ||phi||^2.
inline double chemical_potential(const ComplexField& phi, const HamiltonianAction& h) {
  const double m = mass(phi);
  if (!(m > 0.0)) throw config_error("ZeroField", "chemical potential of a zero field");
  return -inner(phi, h.full).real() / m;
}

/// ||-1/2 Lap phi + V phi + G' phi + L_A phi + lambda phi||_2 / ||phi||_2.
inline double el_residual(const ComplexField& phi, double lambda, const PhysParams& P) {
  const double m = mass(phi);
  if (!(m > 0.0)) throw config_error("ZeroField", "residual of a zero field");
  ComplexField r = apply_hamiltonian(phi, P).full;
  r.axpy(Complex(lambda, 0.0), phi);
  return std::sqrt(mass(r) / m);
}

struct GroundState {
  ComplexField field;
  double lambda = 0.0;
  double residual = 0.0;
  EnergyBreakdown energy;
  std::size_t iterations = 0;
  double target_mass = 0.0;  // c^2
  bool converged = false;
  bool diverged = false;
  std::string seed;  // description of the initial guess
};

/// Thrown when the flow stops without meeting the tolerance; carries the
/// best iterate.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& msg, GroundState best)
      : Error(ErrorClass::Numerical, "NonConvergence", msg), best_(std::move(best)) {}
  const GroundState& best() const noexcept { return best_; }

private:
  GroundState best_;
};

struct GradientFlowOptions {
  double dtau = 0.5;              // initial pseudo-time step
  double tol = 1e-8;              // EL residual tolerance
  std::size_t max_iter = 20000;
  std::size_t divergence_window = 50;  // consecutive energy increases before giving up
  bool conjugate = true;          // Polak-Ribiere acceleration of the descent direction
  std::function<void(std::size_t, const ComplexField&, double)> observer;  // (iteration, phi, energy)
};

namespace detail {

/// Symmetric preconditioner P_V^{1/2} P_K P_V^{1/2} with
/// P_K = (a + |k|^2/2)^{-1} in transform space and P_V = (a + V_+)^{-1}
/// pointwise.
class FlowPreconditioner {
public:
  FlowPreconditioner(const GridSpec& g, const RealField& V) : grid_(g), plans_(fft_plans(g)), sqrt_pv_(g), k2_(g) {
    v_plus_.resize(g.size());
    for (std::size_t f = 0; f < g.size(); ++f) v_plus_[f] = std::max(V[f], 0.0);
    for_each_index(g, [&](std::size_t f, const auto& idx) {
      double s = 0.0;
      for (int j = 0; j < g.dim; ++j) {
        const double k = g.wavenumber(j, idx[j]);
        s += k * k;
      }
      k2_[f] = 0.5 * s;
    });
  }

  void set_shift(double a) {
    shift_ = a;
    for (std::size_t f = 0; f < grid_.size(); ++f) sqrt_pv_[f] = 1.0 / std::sqrt(a + v_plus_[f]);
  }

  ComplexField apply(ComplexField r) const {
    for (std::size_t f = 0; f < r.size(); ++f) r[f] *= sqrt_pv_[f];
    plans_->forward(r.values());
    for (std::size_t f = 0; f < r.size(); ++f) r[f] /= shift_ + k2_[f];
    plans_->inverse(r.values());
    for (std::size_t f = 0; f < r.size(); ++f) r[f] *= sqrt_pv_[f];
    return r;
  }

private:
  GridSpec grid_;
  std::shared_ptr<const FftPlans> plans_;
  std::vector<double> v_plus_;
  RealField sqrt_pv_;
  RealField k2_;
  double shift_ = 1.0;
};

inline double nonlinear_energy(const ComplexField& phi, const PhysParams& P) {
  double s = 0.0;
  for (const auto& v : phi.values()) s += nonlinear_energy_density(std::norm(v), P);
  return s * phi.grid().cell_volume();
}

inline void project_tangent(ComplexField& d, const ComplexField& phi, double m) {
  const double a = inner(phi, d).real() / m;
  d.axpy(Complex(-a, 0.0), phi);
}

inline void renormalize(ComplexField& phi, double target_mass) {
  phi *= Complex(std::sqrt(target_mass / mass(phi)), 0.0);
}

}  // namespace detail

/// Product of the per-axis harmonic ground states, scaled to mass c^2.
/// Axes with gamma_j <= 0 use unit width.
inline ComplexField trap_gaussian(const GridSpec& g, const PhysParams& P, double c) {
  check_grid_matches(P, g);
  ComplexField f = sample(g, [&](const Point& x) {
    double e = 0.0;
    for (int j = 0; j < g.dim; ++j) {
      const double w = P.gamma[j] > 0.0 ? P.gamma[j] : 1.0;
      e += w * x[j] * x[j];
    }
    return Complex(std::exp(-0.5 * e), 0.0);
  });
  if (c != 0.0) detail::renormalize(f, c * c);
  return f;
}

/// Trap Gaussian multiplied by (x_1 + i x_2)^m, for rotating seeds.
inline ComplexField vortex_seed(const GridSpec& g, const PhysParams& P, double c, int m) {
  if (g.dim < 2) throw config_error("RotationNeedsPlane", "vortex seeds need d >= 2");
  ComplexField f = trap_gaussian(g, P, 1.0);
  for_each_node(g, [&](std::size_t i, const Point& x) {
    const Complex z(x[0], m >= 0 ? x[1] : -x[1]);
    f[i] *= std::pow(z, std::abs(m));
  });
  if (c != 0.0) detail::renormalize(f, c * c);
  return f;
}

/// Minimizes E over the sphere ||phi||_2^2 = c^2 by a preconditioned,
/// projected descent flow
///   phi <- c (phi - tau D) / ||phi - tau D||,
/// where D is the preconditioned residual P(H phi - <H phi,phi>/c^2 phi)
/// projected onto the tangent space (optionally combined with the previous
/// direction, Polak-Ribiere). tau adapts: a step that raises the energy is
/// retried with a smaller tau, so every accepted step is monotone. Fixed
/// points are exactly the solutions of H phi + lambda phi = 0.
inline GroundState gradient_flow(const PhysParams& P, const ComplexField& init, double c,
                                 const GradientFlowOptions& opt = {}) {
  P.validate();
  check_grid_matches(P, init.grid());
  if (!(c > 0.0)) throw config_error("InvalidTargetMass", "target norm c must be positive");
  if (!(opt.dtau > 0.0)) throw config_error("InvalidTimeStep", "dtau must be positive");
  if (!(opt.tol > 0.0)) throw config_error("InvalidTolerance", "tolerance must be positive");
  if (!(mass(init) > 0.0)) throw config_error("ZeroField", "initial guess is zero");

  const GridSpec& g = init.grid();
  const RealField V = build_potential(P, g);
  const double m = c * c;
  detail::FlowPreconditioner prec(g, V);

  ComplexField phi = init;
  detail::renormalize(phi, m);
  auto h = apply_hamiltonian(phi, P, V);
  auto energy_of = [&](const ComplexField& f, const HamiltonianAction& a) {
    return inner(f, a.linear).real() + detail::nonlinear_energy(f, P);
  };
  double E = energy_of(phi, h);

  GroundState gs;
  gs.target_mass = m;
  auto finish = [&](bool converged) {
    gs.field = phi;
    gs.lambda = chemical_potential(phi, h);
    ComplexField r = h.full;
    r.axpy(Complex(gs.lambda, 0.0), phi);
    gs.residual = std::sqrt(mass(r) / m);
    gs.energy = energy_breakdown(phi, P);
    gs.converged = converged;
  };

  double tau = opt.dtau;
  std::size_t increases = 0;
  ComplexField dir_prev, pr_prev;
  double rz_prev = 0.0;
  for (std::size_t it = 0;; ++it) {
    if (opt.observer) opt.observer(it, phi, E);
    const double mu_r = inner(phi, h.full).real() / m;
    ComplexField r = h.full;
    r.axpy(Complex(-mu_r, 0.0), phi);
    const double res = std::sqrt(mass(r) / m);
    if (res < opt.tol) {
      gs.iterations = it;
      finish(true);
      return gs;
    }
    if (it >= opt.max_iter) {
      gs.iterations = it;
      finish(false);
      throw NonConvergence("gradient flow did not reach the tolerance in " + std::to_string(opt.max_iter) +
                               " iterations (residual " + std::to_string(res) + ")",
                           gs);
    }

    // shift ~ energy scale of the current iterate keeps P well conditioned
    const double scale = std::max(1.0, std::abs(inner(phi, h.linear).real()) / m);
    prec.set_shift(scale);
    ComplexField z = prec.apply(r);
    detail::project_tangent(z, phi, m);
    const double rz = inner(r, z).real();

    ComplexField dir = z;
    if (opt.conjugate && it > 0 && rz_prev > 0.0 && dir_prev.size() == z.size()) {
      const double beta = std::max(0.0, (rz - inner(r, pr_prev).real()) / rz_prev);
      dir.axpy(Complex(beta, 0.0), dir_prev);
      detail::project_tangent(dir, phi, m);
      if (inner(r, dir).real() <= 0.0) dir = z;  // not a descent direction
    }
    const double slope = -2.0 * inner(h.full, dir).real();  // dE/dtau at tau = 0

    bool accepted = false, flat = false;
    for (int tries = 0; tries < 60; ++tries) {
      ComplexField trial = phi;
      trial.axpy(Complex(-tau, 0.0), dir);
      detail::renormalize(trial, m);
      auto ht = apply_hamiltonian(trial, P, V);
      const double Et = energy_of(trial, ht);
      if (std::isfinite(Et) && Et <= E + 1e-12 * std::abs(E)) {
        // quadratic model through E, slope and Et proposes the next step
        const double curv = (Et - E - slope * tau) / (tau * tau);
        const double tau_star = curv > 0.0 ? -slope / (2.0 * curv) : 4.0 * tau;
        // below roundoff the energy carries no step-size information
        flat = std::abs(Et - E) <= 1e-13 * std::max(std::abs(E), 1.0);
        phi = std::move(trial);
        h = std::move(ht);
        E = Et;
        tau = flat ? std::max(tau, opt.dtau) : std::clamp(tau_star, 0.25 * tau, 4.0 * tau);
        accepted = true;
        increases = 0;
        break;
      }
      const double curv = (Et - E - slope * tau) / (tau * tau);
      const double tau_star = std::isfinite(curv) && curv > 0.0 ? -slope / (2.0 * curv) : 0.0;
      tau = std::clamp(tau_star, 0.1 * tau, 0.5 * tau);
      if (tries == 0) dir = z;  // fall back to plain descent on rejection
    }
    if (!accepted) ++increases;  // every trial step raised the energy
    if (increases >= opt.divergence_window) {
      gs.iterations = it + 1;
      gs.diverged = true;
      finish(false);
      throw NonConvergence("energy failed to decrease for " + std::to_string(opt.divergence_window) +
                               " consecutive steps",
                           gs);
    }
    pr_prev = z;
    dir_prev = dir;
    rz_prev = flat ? 0.0 : rz;  // restart the conjugate direction after a flat step
  }
}

/// Overload in the positional order (params, init, c, dtau, tol, max_iter).
inline GroundState gradient_flow(const PhysParams& P, const ComplexField& init, double c, double dtau, double tol,
                                 std::size_t max_iter) {
  GradientFlowOptions opt;
  opt.dtau = dtau;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return gradient_flow(P, init, c, opt);
}

// ---------------------------------------------------------------------------
// Coercivity probe: E(u) >= eps ||u||_Sigma^2 - C ||u||_2^2 on a mass ball

struct CoercivitySample {
  double energy, sigma_sq, mass;
};

struct CoercivityProbe {
  double epsilon = 0.0;
  double fitted_c = 0.0;       // max over training of (eps Sigma^2 - E)/M
  double c = 0.0;              // fitted_c plus the safety margin
  double worst_holdout = 0.0;  // min over held-out of E - eps Sigma^2 + C M
  std::size_t training = 0, holdout = 0;
  bool holds = false;
};

/// Smooth random field: trap Gaussian envelope times a random band-limited
/// complex modulation, scaled to mass m.
inline ComplexField random_smooth_field(const GridSpec& g, const PhysParams& P, double m, std::mt19937_64& rng,
                                        int modes = 4) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> width(0.5, 2.0);
  const double w = width(rng);
  struct Mode {
    std::array<double, kMaxDim> k;
    Complex a;
  };
  std::vector<Mode> ms;
  for (int i = 0; i < modes; ++i) {
    Mode md{};
    for (int j = 0; j < g.dim; ++j) md.k[j] = 0.7 * n01(rng);
    md.a = Complex(n01(rng), n01(rng));
    ms.push_back(md);
  }
  ComplexField f = sample(g, [&](const Point& x) {
    double e = 0.0;
    for (int j = 0; j < g.dim; ++j) {
      const double s = P.gamma[j] > 0.0 ? P.gamma[j] : 1.0;
      e += s * x[j] * x[j];
    }
    Complex mod(1.0, 0.0);
    for (const auto& md : ms) {
      double ph = 0.0;
      for (int j = 0; j < g.dim; ++j) ph += md.k[j] * x[j];
      mod += 0.5 * md.a * std::polar(1.0, ph);
    }
    return mod * std::exp(-0.5 * e / w);
  });
  detail::renormalize(f, m);
  return f;
}

/// Fits C for a fixed eps on `training` random fields with mass below
/// mass_cap, adds a margin of max(|C_fit|, 1), and checks the envelope on
/// `holdout` further fields.
inline CoercivityProbe coercivity_probe(const GridSpec& g, const PhysParams& P, double mass_cap, double eps,
                                        std::size_t training, std::size_t holdout, std::uint64_t seed) {
  if (!(eps > 0.0)) throw config_error("InvalidEpsilon", "eps must be positive");
  if (!(mass_cap > 0.0)) throw config_error("InvalidTargetMass", "mass cap must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  auto draw = [&]() {
    const double m = frac(rng) * mass_cap;
    const ComplexField u = random_smooth_field(g, P, m, rng);
    const auto E = energy_breakdown(u, P);
    const auto n = norms(u, P);
    return CoercivitySample{E.total, n.sigma * n.sigma, n.mass};
  };
  CoercivityProbe out;
  out.epsilon = eps;
  out.training = training;
  out.holdout = holdout;
  out.fitted_c = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < training; ++i) {
    const auto s = draw();
    out.fitted_c = std::max(out.fitted_c, (eps * s.sigma_sq - s.energy) / s.mass);
  }
  out.c = out.fitted_c + std::max(std::abs(out.fitted_c), 1.0);
  out.worst_holdout = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < holdout; ++i) {
    const auto s = draw();
    out.worst_holdout = std::min(out.worst_holdout, s.energy - eps * s.sigma_sq + out.c * s.mass);
  }
  out.holds = out.worst_holdout >= 0.0;
  return out;
}

}  // namespace rnls
