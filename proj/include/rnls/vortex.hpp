#pragma once

#include <numbers>
#include <optional>
#include <ostream>

#include "rnls/inequalities.hpp"
#include "rnls/model.hpp"

namespace rnls {

/// Trial families:
///   Iso2D        psi_m = gamma^{(|m|+1)/2} / sqrt(pi |m|!) |x|^{|m|} e^{-gamma|x|^2/2} e^{i m theta}
///   Iso3D        psi_m(x1,x2) (gamma/pi)^{1/4} e^{-gamma x3^2/2}
///   Aniso3D      C_m x1^{|m|} e^{-sum gamma_j x_j^2 / 2} e^{i m theta}
///   Repulsive3D  C_m x_{j0}^{|m|} e^{-sum alpha_j x_j^2 / 2}, alpha_j = |gamma_j| (1 if gamma_j = 0)
/// with theta the polar angle in the (x1, x2) plane.
enum class VortexVariant { Iso2D, Iso3D, Aniso3D, Repulsive3D };

inline std::string to_string(VortexVariant v) {
  switch (v) {
    case VortexVariant::Iso2D: return "Iso2D";
    case VortexVariant::Iso3D: return "Iso3D";
    case VortexVariant::Aniso3D: return "Aniso3D";
    case VortexVariant::Repulsive3D: return "Repulsive3D";
  }
  return "?";
}

inline VortexVariant parse_vortex_variant(const std::string& s) {
  if (s == "Iso2D") return VortexVariant::Iso2D;
  if (s == "Iso3D") return VortexVariant::Iso3D;
  if (s == "Aniso3D") return VortexVariant::Aniso3D;
  if (s == "Repulsive3D") return VortexVariant::Repulsive3D;
  throw config_error("UnknownVariant", "unknown vortex variant '" + s + "'");
}

struct VortexSpec {
  VortexVariant variant = VortexVariant::Iso2D;
  int m = 1;
  PhysParams params;
  int j0 = -1;  // Repulsive3D power axis; -1 selects the first gamma_j < 0
};

namespace detail {

inline double axis_alpha(double g) { return g == 0.0 ? 1.0 : std::abs(g); }

inline int repulsive_axis(const VortexSpec& s) {
  if (s.j0 >= 0) return s.j0;
  for (int j = 0; j < s.params.dim; ++j)
    if (s.params.gamma[j] < 0.0) return j;
  return -1;
}

inline void validate_spec(const VortexSpec& s) {
  const auto& P = s.params;
  P.validate();
  const auto& g = P.gamma;
  auto bad = [](const std::string& why) { return config_error("IncompatibleVortexSpec", why); };
  switch (s.variant) {
    case VortexVariant::Iso2D:
      if (P.dim != 2) throw bad("Iso2D needs d = 2");
      if (!(g[0] > 0.0 && g[0] == g[1])) throw bad("Iso2D needs gamma_1 = gamma_2 > 0");
      break;
    case VortexVariant::Iso3D:
      if (P.dim != 3) throw bad("Iso3D needs d = 3");
      if (!(g[0] > 0.0 && g[0] == g[1] && g[1] == g[2])) throw bad("Iso3D needs equal positive gamma");
      break;
    case VortexVariant::Aniso3D:
      if (P.dim != 3) throw bad("Aniso3D needs d = 3");
      if (!(g[0] > 0.0 && g[0] <= g[1] && g[2] > 0.0)) throw bad("Aniso3D needs 0 < gamma_1 <= gamma_2 and gamma_3 > 0");
      break;
    case VortexVariant::Repulsive3D: {
      if (P.dim != 3) throw bad("Repulsive3D needs d = 3");
      const int j0 = repulsive_axis(s);
      if (j0 < 0 || j0 >= 3 || !(g[j0] < 0.0)) throw bad("Repulsive3D needs gamma_{j0} < 0 on the power axis");
      break;
    }
  }
}

}  // namespace detail

/// Unit-mass trial field on the grid. Raises Unresolved when the grid mass
/// differs from 1 by more than 1e-6.
inline ComplexField make_vortex(const VortexSpec& s, const GridSpec& grid) {
  detail::validate_spec(s);
  check_grid_matches(s.params, grid);
  const auto& g = s.params.gamma;
  const int n = std::abs(s.m);
  const double sign = s.m >= 0 ? 1.0 : -1.0;
  ComplexField f(grid);
  switch (s.variant) {
    case VortexVariant::Iso2D:
    case VortexVariant::Iso3D: {
      const double gm = g[0];
      const double c2 = std::exp(0.5 * (n + 1) * std::log(gm) - 0.5 * (std::log(std::numbers::pi) + std::lgamma(n + 1.0)));
      const double c3 = s.variant == VortexVariant::Iso3D ? std::pow(gm / std::numbers::pi, 0.25) : 1.0;
      for_each_node(grid, [&](std::size_t i, const Point& x) {
        double r2 = x[0] * x[0] + x[1] * x[1];
        if (s.variant == VortexVariant::Iso3D) r2 += x[2] * x[2];
        f[i] = c2 * c3 * std::pow(Complex(x[0], sign * x[1]), n) * std::exp(-0.5 * gm * r2);
      });
      break;
    }
    case VortexVariant::Aniso3D: {
      const double norm = gaussian_moment(n, g[0]) * std::sqrt(std::numbers::pi / g[1]) *
                          std::sqrt(std::numbers::pi / g[2]);
      const double cm = 1.0 / std::sqrt(norm);
      for_each_node(grid, [&](std::size_t i, const Point& x) {
        const double e = g[0] * x[0] * x[0] + g[1] * x[1] * x[1] + g[2] * x[2] * x[2];
        const double r = std::hypot(x[0], x[1]);
        const Complex phase = r > 0.0 ? std::pow(Complex(x[0], sign * x[1]) / r, n) : Complex(1.0, 0.0);
        f[i] = cm * std::pow(x[0], n) * std::exp(-0.5 * e) * phase;
      });
      break;
    }
    case VortexVariant::Repulsive3D: {
      const int j0 = detail::repulsive_axis(s);
      double norm = 1.0;
      for (int j = 0; j < 3; ++j) {
        const double a = detail::axis_alpha(g[j]);
        norm *= j == j0 ? gaussian_moment(n, a) : std::sqrt(std::numbers::pi / a);
      }
      const double cm = 1.0 / std::sqrt(norm);
      for_each_node(grid, [&](std::size_t i, const Point& x) {
        double e = 0.0;
        for (int j = 0; j < 3; ++j) e += detail::axis_alpha(g[j]) * x[j] * x[j];
        f[i] = cm * std::pow(x[j0], n) * std::exp(-0.5 * e);
      });
      break;
    }
  }
  const double m = mass(f);
  if (std::abs(m - 1.0) > 1e-6)
    throw numerical_error("Unresolved", "vortex mass on the grid is " + std::to_string(m) + ", not 1");
  return f;
}

/// Analytic kinetic, potential and rotation parts. For Aniso3D the kinetic
/// value is an upper bound.
struct ClosedFormLinear {
  double kinetic = 0.0;  // 1/2 ||grad psi||^2
  double potential = 0.0;
  double rotation = 0.0;
  bool kinetic_is_bound = false;
};

inline ClosedFormLinear closed_form_linear(const VortexSpec& s) {
  detail::validate_spec(s);
  const auto& P = s.params;
  const auto& g = P.gamma;
  const double n = std::abs(s.m);
  const double omega = P.omega.empty() ? 0.0 : P.omega[0];
  ClosedFormLinear c;
  switch (s.variant) {
    case VortexVariant::Iso2D:
      c.kinetic = 0.5 * (n + 1) * g[0];
      c.potential = 0.5 * (n + 1) * g[0];
      c.rotation = -s.m * omega;
      break;
    case VortexVariant::Iso3D:
      c.kinetic = 0.5 * ((n + 1) * g[0] + 0.5 * g[0]);
      c.potential = 0.5 * (n + 1) * g[0] + 0.25 * g[0];
      c.rotation = -s.m * omega;
      break;
    case VortexVariant::Aniso3D:
      if (n < 1) throw config_error("SingularClosedForm", "Aniso3D closed form needs |m| >= 1");
      c.kinetic = 0.5 * (g[0] * (n * n + n - 0.25) / (n - 0.5) + 0.5 * (g[1] + g[2]));
      c.potential = 0.5 * g[0] * n + 0.25 * (g[0] + g[1] + g[2]);
      c.rotation = -s.m * omega;
      c.kinetic_is_bound = true;
      break;
    case VortexVariant::Repulsive3D: {
      if (n < 1) throw config_error("SingularClosedForm", "Repulsive3D closed form needs |m| >= 1");
      const int j0 = detail::repulsive_axis(s);
      double grad2 = 0.0, pot = 0.0;
      for (int j = 0; j < 3; ++j) {
        const double a = detail::axis_alpha(g[j]);
        const double sg2 = (g[j] < 0.0 ? -1.0 : 1.0) * g[j] * g[j];
        if (j == j0) {
          grad2 += a * (n - 0.25) / (n - 0.5);
          pot += 0.5 * sg2 * (n + 0.5) / a;
        } else {
          grad2 += 0.5 * a;
          pot += 0.25 * sg2 / a;
        }
      }
      c.kinetic = 0.5 * grad2;
      c.potential = pot;
      c.rotation = 0.0;
      break;
    }
  }
  return c;
}

/// Leading coefficient of E(psi_m) in |m| (m taking the sign of Omega).
inline double bound_slope(const VortexSpec& s) {
  const auto& g = s.params.gamma;
  const double omega = s.params.omega.empty() ? 0.0 : std::abs(s.params.omega[0]);
  switch (s.variant) {
    case VortexVariant::Iso2D:
    case VortexVariant::Iso3D:
    case VortexVariant::Aniso3D: return g[0] - omega;
    case VortexVariant::Repulsive3D: return -0.5 * std::abs(g[detail::repulsive_axis(s)]);
  }
  return 0.0;
}

inline double vortex_nonlinear_energy(const ComplexField& psi, const PhysParams& P) {
  double s = 0.0;
  for (const auto& v : psi.values()) s += nonlinear_energy_density(std::norm(v), P);
  return s * psi.grid().cell_volume();
}

/// Closed-form linear parts with the nonlinear part by grid quadrature.
inline EnergyBreakdown closed_form_energy(const VortexSpec& s, const GridSpec& grid) {
  const auto c = closed_form_linear(s);
  EnergyBreakdown E;
  E.kinetic = c.kinetic;
  E.potential = c.potential;
  E.rotation = c.rotation;
  E.nonlinear = vortex_nonlinear_energy(make_vortex(s, grid), s.params);
  E.total = E.kinetic + E.potential + E.rotation + E.nonlinear;
  return E;
}

inline EnergyBreakdown quadrature_energy(const VortexSpec& s, const GridSpec& grid) {
  return energy_breakdown(make_vortex(s, grid), s.params);
}

struct VortexReport {
  int m = 0;
  EnergyBreakdown closed_form;
  EnergyBreakdown quadrature;
  double bound_slope = 0.0;
  bool kinetic_is_bound = false;
};

inline VortexReport vortex_report(const VortexSpec& s, const GridSpec& grid) {
  VortexReport r;
  r.m = s.m;
  const ComplexField psi = make_vortex(s, grid);
  r.quadrature = energy_breakdown(psi, s.params);
  const auto c = closed_form_linear(s);
  r.closed_form.kinetic = c.kinetic;
  r.closed_form.potential = c.potential;
  r.closed_form.rotation = c.rotation;
  r.closed_form.nonlinear = r.quadrature.nonlinear;
  r.closed_form.total = c.kinetic + c.potential + c.rotation + r.quadrature.nonlinear;
  r.bound_slope = bound_slope(s);
  r.kinetic_is_bound = c.kinetic_is_bound;
  return r;
}

/// Grid for a vortex sweep: L = 15 and N = 256 in 2D; in 3D N = 128 and
/// L = max(15, 3 sqrt(m_max / gamma_min)).
inline GridSpec vortex_grid(int dim, int m_max, const std::vector<double>& gamma) {
  if (dim == 2) return make_grid(2, 15.0, 256);
  double gmin = std::numeric_limits<double>::infinity();
  for (double g : gamma) gmin = std::min(gmin, detail::axis_alpha(g));
  const double L = std::max(15.0, 3.0 * std::sqrt(std::abs(m_max) / gmin));
  return make_grid(dim, L, 128);
}

struct SweepRow {
  int m = 0;
  EnergyBreakdown quadrature;
  ClosedFormLinear closed;
  double closed_total = 0.0;  // closed linear parts + quadrature nonlinear part
};

struct SweepResult {
  VortexVariant variant{};
  std::vector<SweepRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double expected_slope = 0.0;
};

/// Evaluates E(psi_m) over m in [m_lo, m_hi] (sign of m follows Omega for
/// rotating variants) and fits E ~ slope |m| + intercept on the closed-form
/// totals with |m| >= fit_from. With quadrature off only the nonlinear part
/// is computed on the grid.
inline SweepResult divergence_sweep(VortexVariant variant, const PhysParams& P, int m_lo, int m_hi,
                                    const GridSpec& grid, int fit_from = 10, bool quadrature = true) {
  const auto regime = classify_regime(P);
  if (regime.kind != RegimeKind::NonExistence)
    throw config_error("RegimeMismatch", "divergence sweep needs a NonExistence regime, got " + regime.label());
  if (m_lo < 1 || m_hi < m_lo) throw config_error("InvalidRange", "need 1 <= m_lo <= m_hi");
  const double omega = P.omega.empty() ? 0.0 : P.omega[0];
  const int sign = variant != VortexVariant::Repulsive3D && omega < 0.0 ? -1 : 1;
  SweepResult out;
  out.variant = variant;
  for (int n = m_lo; n <= m_hi; ++n) {
    VortexSpec s{variant, sign * n, P, -1};
    SweepRow row;
    row.m = s.m;
    row.closed = closed_form_linear(s);
    const ComplexField psi = make_vortex(s, grid);
    if (quadrature) {
      row.quadrature = energy_breakdown(psi, P);
    } else {
      row.quadrature.nonlinear = vortex_nonlinear_energy(psi, P);
      row.quadrature.kinetic = row.quadrature.potential = row.quadrature.rotation = std::nan("");
      row.quadrature.total = std::nan("");
    }
    row.closed_total = row.closed.kinetic + row.closed.potential + row.closed.rotation + row.quadrature.nonlinear;
    out.rows.push_back(row);
    out.expected_slope = bound_slope(s);
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.rows)
    if (std::abs(r.m) >= fit_from) {
      xs.push_back(std::abs(r.m));
      ys.push_back(r.closed_total);
    }
  if (xs.size() < 2) {
    xs.clear();
    ys.clear();
    const std::size_t half = out.rows.size() / 2;
    for (std::size_t i = half; i < out.rows.size(); ++i) {
      xs.push_back(std::abs(out.rows[i].m));
      ys.push_back(out.rows[i].closed_total);
    }
  }
  if (xs.size() < 2) throw config_error("InvalidRange", "need at least two m values to fit a slope");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = double(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / k;
  return out;
}

/// CSV with columns m, kinetic, potential, rotation, nonlinear, total,
/// closed_kinetic, closed_potential, closed_rotation.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "m,kinetic,potential,rotation,nonlinear,total,closed_kinetic,closed_potential,closed_rotation\n";
  char buf[512];
  for (const auto& row : r.rows) {
    const auto& q = row.quadrature;
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.m, q.kinetic,
                  q.potential, q.rotation, q.nonlinear, q.total, row.closed.kinetic, row.closed.potential,
                  row.closed.rotation);
    os << buf;
  }
}

}  // namespace rnls
