#pragma once

// Command-line front end: configuration, presets, manifests and the
// subcommand dispatch. Kept header-only like the rest of the library; it is
// the only part that needs nlohmann/json, CLI11 and OpenSSL.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "rnls/rnls.hpp"

namespace rnls::app {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Checksums and file output

inline std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw io_error("ChecksumFailed", "SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::vector<unsigned char> read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw io_error("ReadFailed", "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

/// Collects produced files and headline scalars for the manifest.
class Run {
public:
  Run(std::string command, json config, fs::path out_dir)
      : command_(std::move(command)), config_(std::move(config)), out_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw io_error("WriteFailed", "cannot create output directory " + out_.string() + ": " + ec.message());
  }

  const fs::path& out_dir() const { return out_; }
  fs::path path(const std::string& name) const { return out_ / name; }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream os(path(name), std::ios::binary);
    if (!os) throw io_error("WriteFailed", "cannot open " + path(name).string());
    os << text;
    if (!os) throw io_error("WriteFailed", "short write to " + path(name).string());
    artifacts_.push_back(name);
  }

  void write_snapshot(const std::string& name, const ComplexField& f, double t) {
    snapshot::write(path(name).string(), f, t);
    artifacts_.push_back(name);
  }

  void set_grid(const GridSpec& g) {
    json gj;
    gj["d"] = g.dim;
    gj["L"] = json::array();
    gj["N"] = json::array();
    for (int j = 0; j < g.dim; ++j) {
      gj["L"].push_back(g.half_width[j]);
      gj["N"].push_back(g.points[j]);
    }
    grid_ = gj;
  }

  json& headline() { return headline_; }
  void warn(const std::string& w) {
    std::cerr << "warning: " << w << "\n";
    warnings_.push_back(w);
  }

  json manifest() const {
    json m;
    m["command"] = command_;
    m["code_version"] = kVersion;
    m["config"] = config_;
    if (!grid_.is_null()) m["grid"] = grid_;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["artifacts"] = json::array();
    for (const auto& a : artifacts_) {
      const auto bytes = read_file(path(a));
      m["artifacts"].push_back({{"path", a}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    m["headline"] = headline_;
    m["warnings"] = warnings_;
    return m;
  }

  void write_manifest() const {
    std::ofstream os(path("manifest.json"));
    if (!os) throw io_error("WriteFailed", "cannot write manifest");
    os << manifest().dump(2) << "\n";
  }

private:
  std::string command_;
  json config_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> artifacts_;
  json headline_ = json::object();
  json grid_;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Config access with schema checks

class Config {
public:
  Config(const json& j, std::set<std::string> allowed) : j_(j) {
    if (!j_.is_object()) throw config_error("InvalidConfig", "configuration must be a JSON object");
    for (const auto& [k, v] : j_.items())
      if (!allowed.count(k)) throw config_error("UnknownKey", "unknown configuration key '" + k + "'");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  double num(const std::string& k, double def) const {
    if (!has(k)) return def;
    if (!j_[k].is_number()) throw config_error("InvalidValue", "'" + k + "' must be a number");
    return j_[k].get<double>();
  }

  long integer(const std::string& k, long def) const {
    if (!has(k)) return def;
    if (!j_[k].is_number_integer()) throw config_error("InvalidValue", "'" + k + "' must be an integer");
    return j_[k].get<long>();
  }

  std::string str(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    if (!j_[k].is_string()) throw config_error("InvalidValue", "'" + k + "' must be a string");
    return j_[k].get<std::string>();
  }

  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!j_[k].is_boolean()) throw config_error("InvalidValue", "'" + k + "' must be true or false");
    return j_[k].get<bool>();
  }

  /// Number or array of numbers, expanded to `n` entries.
  std::vector<double> vec(const std::string& k, std::size_t n, double def) const {
    if (!has(k)) return std::vector<double>(n, def);
    const auto& v = j_[k];
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    if (!v.is_array()) throw config_error("InvalidValue", "'" + k + "' must be a number or an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw config_error("InvalidValue", "'" + k + "' entries must be numbers");
      out.push_back(e.get<double>());
    }
    if (out.size() != n)
      throw config_error("DimensionMismatch", "'" + k + "' needs " + std::to_string(n) + " entries");
    return out;
  }

  const json& raw(const std::string& k) const { return j_.at(k); }

private:
  const json& j_;
};

inline const std::set<std::string> kPhysicsKeys = {"d", "p", "mu", "omega", "gamma", "c0", "scale"};
inline const std::set<std::string> kGridKeys = {"L", "N"};

inline std::set<std::string> keys(std::initializer_list<std::set<std::string>> groups,
                                  std::initializer_list<std::string> extra) {
  std::set<std::string> s{"seed", "preset", "description"};
  for (const auto& g : groups) s.insert(g.begin(), g.end());
  s.insert(extra.begin(), extra.end());
  return s;
}

inline ScaleConvention parse_scale(const std::string& s) {
  if (s == "AmplitudeScale") return ScaleConvention::AmplitudeScale;
  if (s == "MassScale") return ScaleConvention::MassScale;
  throw config_error("InvalidValue", "scale must be AmplitudeScale or MassScale");
}

inline QSource parse_source(const std::string& s) {
  if (s == "FreeQ0") return QSource::FreeQ0;
  if (s == "TrappedQ") return QSource::TrappedQ;
  throw config_error("InvalidValue", "source must be FreeQ0 or TrappedQ");
}

inline PhysParams physics(const Config& c) {
  PhysParams P;
  P.dim = int(c.integer("d", 2));
  if (P.dim < 1 || P.dim > 3) throw config_error("InvalidDimension", "d must be 1, 2 or 3");
  P.p = c.num("p", 1.0 + 4.0 / P.dim);
  P.mu = c.num("mu", -1.0);
  P.omega = c.vec("omega", std::size_t(P.dim / 2), 0.0);
  P.gamma = c.vec("gamma", std::size_t(P.dim), 1.0);
  P.c0 = c.num("c0", 1.0);
  P.scale = parse_scale(c.str("scale", "AmplitudeScale"));
  P.validate();
  if (!(P.c0 > 0.0)) throw config_error("NonPositiveC0", "c0 must be positive");
  return P;
}

inline GridSpec grid_from(const Config& c, int dim, double default_L, std::size_t default_N) {
  const auto L = c.vec("L", std::size_t(dim), default_L);
  const auto Nd = c.vec("N", std::size_t(dim), double(default_N));
  std::vector<std::size_t> N;
  for (double n : Nd) {
    if (n < 1 || n != std::floor(n)) throw config_error("InvalidValue", "N entries must be positive integers");
    N.push_back(std::size_t(n));
  }
  return make_grid(dim, L, N);
}

inline std::size_t default_points(int dim) { return dim == 3 ? 128 : 256; }

inline void warn_regime(Run& run, const PhysParams& P) {
  const auto r = classify_regime(P);
  run.headline()["regime"] = r.label();
  if (r.kind != RegimeKind::Existence)
    run.warn("parameters classify as " + r.label() + " (" + r.detail + "); a ground state need not exist");
}

inline json energy_json(const EnergyBreakdown& E) {
  return {{"kinetic", E.kinetic},   {"potential", E.potential},         {"rotation", E.rotation},
          {"nonlinear", E.nonlinear}, {"total", E.total}, {"tail_fraction", E.tail_fraction}};
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Presets

/// Named evolve configurations for the reference experiment sets.
inline json presets() {
  const double r2 = std::sqrt(2.0);
  auto free_q0 = [](double om, double g1, double g2, double c) {
    return json{{"d", 2}, {"p", 3.0}, {"mu", -1.0}, {"omega", {om}}, {"gamma", {g1, g2}}, {"scale", "AmplitudeScale"},
                {"L", 15.0}, {"N", 256}, {"source", "FreeQ0"}, {"c", c}, {"T", 2.0}, {"dt", 1e-3}, {"sample_every", 10}};
  };
  auto trapped = [](double om, double g1, double g2, double c) {
    return json{{"d", 2}, {"p", 3.0}, {"mu", -1.0}, {"omega", {om}}, {"gamma", {g1, g2}}, {"scale", "AmplitudeScale"},
                {"L", 6.0}, {"N", 256}, {"source", "TrappedQ"}, {"c", c}, {"T", 2.0}, {"dt", 1e-3}, {"sample_every", 10}};
  };
  json p;
  p["freeq0-0.98-om0.5-g1-sqrt2"] = free_q0(0.5, 1.0, r2, 0.98);
  p["freeq0-1.02-om0.5-g1-sqrt2"] = free_q0(0.5, 1.0, r2, 1.02);
  p["freeq0-0.99-om0.8-g1-2"] = free_q0(0.8, 1.0, 2.0, 0.99);
  p["freeq0-1.03-om0.8-g1-2"] = free_q0(0.8, 1.0, 2.0, 1.03);
  p["trapped-1-om0.5-g2-8"] = trapped(0.5, 2.0, 8.0, 1.0);
  p["trapped-2.515-om0.5-g2-8"] = trapped(0.5, 2.0, 8.0, 2.515);
  p["trapped-2.415-om0.8-g1-sqrt2"] = trapped(0.8, 1.0, r2, 2.415);
  p["trapped-2.43-om0.8-g1-sqrt2"] = trapped(0.8, 1.0, r2, 2.43);
  p["trapped-2.48-om0.8-g1-2"] = trapped(0.8, 1.0, 2.0, 2.48);
  p["trapped-2.495-om0.8-g1-2"] = trapped(0.8, 1.0, 2.0, 2.495);
  p["trapped-2.44-om0.5-g1-2"] = trapped(0.5, 1.0, 2.0, 2.44);
  p["trapped-2.45-om0.5-g1-2"] = trapped(0.5, 1.0, 2.0, 2.45);
  return p;
}

/// Merges a named preset under the explicit config (explicit keys win).
inline json apply_preset(json cfg) {
  if (!cfg.contains("preset")) return cfg;
  if (!cfg["preset"].is_string()) throw config_error("InvalidValue", "'preset' must be a string");
  const auto all = presets();
  const std::string name = cfg["preset"];
  if (!all.contains(name)) throw config_error("UnknownPreset", "unknown preset '" + name + "'");
  json merged = all[name];
  for (const auto& [k, v] : cfg.items()) merged[k] = v;
  return merged;
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_regime(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys}, {}));
  const PhysParams P = physics(c);
  const auto r = classify_regime(P);
  std::cout << r.label() << "\n";
  run.headline()["regime"] = r.label();
  run.headline()["detail"] = r.detail;
}

inline void cmd_shoot(Run& run, const json& cfg) {
  const Config c(cfg, keys({}, {"d", "p", "a_lo", "a_hi", "tol", "h", "r_max"}));
  const int d = int(c.integer("d", 2));
  const double p = c.num("p", 1.0 + 4.0 / std::max(d, 1));
  ShootingOptions opt;
  opt.h = c.num("h", opt.h);
  opt.r_max = c.num("r_max", opt.r_max);
  const auto prof = shoot_radial(d, p, c.num("a_lo", 0.5), c.num("a_hi", d == 3 ? 8.0 : 4.0), c.num("tol", 1e-14), opt);
  std::ostringstream os;
  os << "r,u\n";
  const std::size_t stride = std::max<std::size_t>(1, std::size_t(std::llround(0.01 / prof.h)));
  for (std::size_t i = 0; i < prof.values.size(); i += stride) os << fmt(double(i) * prof.h) << "," << fmt(prof.values[i]) << "\n";
  run.write_text("profile.csv", os.str());
  auto& h = run.headline();
  h["mass"] = prof.mass;
  h["center_value"] = prof.center_value;
  h["cutoff"] = prof.cutoff;
  h["bisections"] = prof.bisections;
  std::cout << "mass " << fmt(prof.mass) << " center " << fmt(prof.center_value) << "\n";
}

inline const std::set<std::string> kFlowKeys = {"c", "dtau", "tol", "max_iter", "init", "init_m"};

inline ComplexField initial_guess(const Config& c, const GridSpec& g, const PhysParams& P, double target,
                                  std::string& label) {
  const std::string init = c.str("init", "gaussian");
  if (init == "gaussian") {
    label = "trap-gaussian";
    return trap_gaussian(g, P, target);
  }
  if (init == "vortex") {
    const int m = int(c.integer("init_m", 1));
    label = "vortex:" + std::to_string(m);
    return vortex_seed(g, P, target, m);
  }
  throw config_error("InvalidValue", "init must be gaussian or vortex");
}

inline GroundState run_flow(Run& run, const Config& c, const GridSpec& g, const PhysParams& P, double target) {
  GradientFlowOptions opt;
  opt.dtau = c.num("dtau", opt.dtau);
  opt.tol = c.num("tol", opt.tol);
  opt.max_iter = std::size_t(c.integer("max_iter", long(opt.max_iter)));
  std::string label;
  const ComplexField init = initial_guess(c, g, P, target, label);
  auto gs = gradient_flow(P, init, target, opt);
  gs.seed = label;
  run.headline()["seed"] = label;
  return gs;
}

inline void cmd_groundstate(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys, kGridKeys, kFlowKeys}, {}));
  const PhysParams P = physics(c);
  const GridSpec g = grid_from(c, P.dim, 15.0, default_points(P.dim));
  run.set_grid(g);
  warn_regime(run, P);
  const double target = c.num("c", 1.0);
  if (P.mass_critical()) {
    const auto q0 = shoot_free_ground_state(P.dim, P.p);
    const double thr = threshold_mass(P, q0.norm());
    if (target >= thr) run.warn("target norm " + fmt(target) + " is not below the threshold " + fmt(thr));
  }
  GroundState gs;
  try {
    gs = run_flow(run, c, g, P, target);
  } catch (const NonConvergence& e) {
    run.write_snapshot("groundstate_best.rnls", e.best().field, 0.0);
    run.headline()["residual"] = e.best().residual;
    run.headline()["iterations"] = e.best().iterations;
    throw;
  }
  run.write_snapshot("groundstate.rnls", gs.field, 0.0);
  auto& h = run.headline();
  h["lambda"] = gs.lambda;
  h["residual"] = gs.residual;
  h["iterations"] = gs.iterations;
  h["mass"] = mass(gs.field);
  h["energy"] = energy_json(gs.energy);
  std::cout << "lambda " << fmt(gs.lambda) << " residual " << gs.residual << " iterations " << gs.iterations << "\n";
}

inline const std::set<std::string> kEvolveKeys = {"source", "c", "T", "dt", "sample_every", "grad_growth",
                                                  "linf_growth", "tail", "init_snapshot"};

inline EvolveOptions evolve_options(const Config& c) {
  EvolveOptions o;
  o.T = c.num("T", o.T);
  o.dt = c.num("dt", o.dt);
  const long se = c.integer("sample_every", long(o.sample_every));
  if (se <= 0) throw config_error("InvalidSampling", "sample_every must be positive");
  o.sample_every = std::size_t(se);
  o.criteria.grad_growth = c.num("grad_growth", o.criteria.grad_growth);
  o.criteria.linf_growth = c.num("linf_growth", o.criteria.linf_growth);
  o.criteria.tail = c.num("tail", o.criteria.tail);
  return o;
}

inline void cmd_evolve(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys, kGridKeys, kEvolveKeys, kFlowKeys}, {}));
  const PhysParams P = physics(c);
  const EvolveOptions opt = evolve_options(c);
  ComplexField psi0;
  GridSpec g;
  if (c.has("init_snapshot")) {
    auto snap = snapshot::read(c.str("init_snapshot", ""));
    psi0 = std::move(snap.field);
    g = psi0.grid();
  } else {
    g = grid_from(c, P.dim, 15.0, default_points(P.dim));
    const QSource src = parse_source(c.str("source", "FreeQ0"));
    if (src == QSource::TrappedQ) warn_regime(run, P);
    ComplexField Q;
    if (src == QSource::FreeQ0) {
      Q = reference_profile(src, P, g);
    } else {
      Q = run_flow(run, c, g, P, 1.0).field;
    }
    psi0 = scaled_initial(Q, c.num("c", 1.0), P.scale);
    run.headline()["source"] = to_string(src);
  }
  run.set_grid(g);
  const auto res = evolve(psi0, P, opt);
  run.write_snapshot("snapshot_t0.rnls", res.initial, 0.0);
  run.write_snapshot("snapshot_final.rnls", res.final_state, res.final_time);
  std::ostringstream os;
  res.trace.write_csv(os);
  run.write_text("trace.csv", os.str());
  auto& h = run.headline();
  const auto& tr = res.trace;
  h["verdict"] = tr.verdict.label();
  h["t_detect"] = tr.verdict.time;
  h["mass"] = tr.mass.front();
  h["energy"] = tr.energy.front();
  double md = 0.0, ed = 0.0;
  const double scale = std::abs(tr.energy.front()) + 0.5 * tr.grad_norm.front() * tr.grad_norm.front();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.mass.front() > 0.0) md = std::max(md, std::abs(tr.mass[i] - tr.mass.front()) / tr.mass.front());
    if (scale > 0.0) ed = std::max(ed, std::abs(tr.energy[i] - tr.energy.front()) / scale);
  }
  h["mass_drift"] = md;
  h["energy_drift"] = ed;
  if (tr.verdict.kind == VerdictKind::Blowup) {
    try {
      const auto fit = fit_blowup_rate(tr);
      h["blowup_exponent"] = fit.exponent;
      h["blowup_time_estimate"] = fit.blowup_time;
    } catch (const Error& e) {
      run.warn(std::string("blowup rate not fitted: ") + e.what());
    }
  }
  std::cout << tr.verdict.label() << " t=" << fmt(tr.verdict.time) << "\n";
}

inline void cmd_vortex_sweep(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys, kGridKeys}, {"variant", "m_lo", "m_hi", "fit_from", "quadrature"}));
  const PhysParams P = physics(c);
  const auto variant = parse_vortex_variant(c.str("variant", P.dim == 2 ? "Iso2D" : "Repulsive3D"));
  const int lo = int(c.integer("m_lo", 1)), hi = int(c.integer("m_hi", 20));
  const GridSpec dflt = vortex_grid(P.dim, hi, P.gamma);
  const GridSpec g = grid_from(c, P.dim, dflt.half_width[0], dflt.points[0]);
  run.set_grid(g);
  const auto res = divergence_sweep(variant, P, lo, hi, g, int(c.integer("fit_from", 10)), c.boolean("quadrature", true));
  std::ostringstream os;
  write_sweep_csv(os, res);
  run.write_text("sweep.csv", os.str());
  run.headline()["slope"] = res.slope;
  run.headline()["intercept"] = res.intercept;
  run.headline()["expected_slope"] = res.expected_slope;
  std::cout << "slope " << fmt(res.slope) << " expected " << fmt(res.expected_slope) << "\n";
}

inline void cmd_check_inequalities(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys, kGridKeys}, {"samples"}));
  const PhysParams P = physics(c);
  const GridSpec g = grid_from(c, P.dim, 15.0, default_points(P.dim));
  run.set_grid(g);
  const auto q0 = shoot_free_ground_state(P.dim, P.p, grid_radius(g));
  const long n = c.integer("samples", 200);
  std::mt19937_64 rng(std::uint64_t(c.integer("seed", 1)));
  const Matrix M = magnetic_matrix(P);
  std::ostringstream os;
  os << "check,index,lhs,rhs,ratio,satisfied\n";
  auto line = [&](const char* kind, long i, const InequalityReport& r) {
    os << kind << "," << i << "," << fmt(r.lhs) << "," << fmt(r.rhs) << "," << fmt(r.ratio) << ","
       << (r.satisfied ? "true" : "false") << "\n";
  };
  PhysParams free = P;
  std::fill(free.omega.begin(), free.omega.end(), 0.0);
  const auto at_q0 = check_gn(lift_to_grid(q0, g, 1.0), free, q0.norm());
  line("gn_q0", 0, at_q0);
  double gn_max = 0.0, dia_max = 0.0;
  bool all = true;
  for (long i = 0; i < n; ++i) {
    const ComplexField u = random_enveloped_field(g, rng);
    const auto gn = check_gn(u, P, q0.norm());
    const auto dia = check_diamagnetic(u, M);
    line("gn", i, gn);
    line("diamagnetic", i, dia);
    gn_max = std::max(gn_max, gn.ratio);
    dia_max = std::max(dia_max, dia.ratio);
    all = all && gn.satisfied && dia.satisfied;
  }
  run.write_text("inequalities.csv", os.str());
  auto& h = run.headline();
  h["gn_ratio_q0"] = at_q0.ratio;
  h["gn_ratio_max_random"] = gn_max;
  h["diamagnetic_ratio_max"] = dia_max;
  h["all_satisfied"] = all;
  std::cout << "gn(Q0) " << fmt(at_q0.ratio) << " max gn " << fmt(gn_max) << " max diamagnetic " << fmt(dia_max) << "\n";
}

inline Matrix matrix_from(const json& j, int dim) {
  if (!j.is_array() || j.size() != std::size_t(dim))
    throw config_error("InvalidValue", "'C' must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
  Matrix M;
  M.dim = dim;
  for (int i = 0; i < dim; ++i) {
    if (!j[i].is_array() || j[i].size() != std::size_t(dim)) throw config_error("InvalidValue", "'C' rows have wrong size");
    for (int k = 0; k < dim; ++k) {
      if (!j[i][k].is_number()) throw config_error("InvalidValue", "'C' entries must be numbers");
      M(i, k) = j[i][k].get<double>();
    }
  }
  return M;
}

inline void cmd_gauge_check(Run& run, const json& cfg) {
  const Config c(cfg, keys({kGridKeys}, {"d", "C", "width"}));
  const int d = int(c.integer("d", 2));
  const GridSpec g = grid_from(c, d, 8.0, default_points(d));
  run.set_grid(g);
  Matrix C;
  if (c.has("C")) {
    C = matrix_from(c.raw("C"), d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < i; ++k)
        if (std::abs(C(i, k) - C(k, i)) > 1e-12 * (std::abs(C(i, k)) + std::abs(C(k, i)) + 1.0))
          throw config_error("NonSymmetricGauge", "'C' must be symmetric");
  } else {
    C.dim = d;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) C(i, k) = i == k ? 0.0 : 1.0;
  }
  const double err = gauge_identity_error(g, C, c.num("width", 1.0));
  run.headline()["max_error"] = err;
  std::cout << "gauge identity max error " << err << "\n";
}

inline void cmd_scan(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys, kGridKeys, kEvolveKeys, kFlowKeys},
                           {"mode", "c_lo", "c_hi", "tol_c", "c_values", "workers"}));
  const PhysParams P = physics(c);
  const QSource src = parse_source(c.str("source", "TrappedQ"));
  const GridSpec g = grid_from(c, P.dim, src == QSource::TrappedQ ? 6.0 : 15.0, default_points(P.dim));
  run.set_grid(g);
  warn_regime(run, P);
  const EvolveOptions opt = evolve_options(c);
  const ComplexField Q = src == QSource::FreeQ0 ? reference_profile(src, P, g) : run_flow(run, c, g, P, 1.0).field;
  const auto q0 = shoot_free_ground_state(P.dim, P.p);
  auto& h = run.headline();
  h["source"] = to_string(src);
  const std::string mode = c.str("mode", "bisect");
  std::ostringstream csv;
  if (mode == "bisect") {
    const auto r = bisect_threshold(Q, src, P, c.num("c_lo", 2.40), c.num("c_hi", 2.56), c.num("tol_c", 0.005), opt);
    auto runs = r.runs;
    std::sort(runs.begin(), runs.end(), [](const ThresholdRun& a, const ThresholdRun& b) { return a.c < b.c; });
    write_runs_csv(csv, runs);
    run.write_text("runs.csv", csv.str());
    run.write_text("summary.txt", summary_line(r) + "\n");
    const auto cmp = compare_to_critical(r, q0.mass);
    h["c_global"] = r.c_global;
    h["c_blowup"] = r.c_blowup;
    h["c_thresh"] = r.c_thresh;
    h["excess_over_critical"] = cmp.excess;
    h["indeterminate"] = r.indeterminate;
    std::cout << summary_line(r) << "\n";
    if (r.indeterminate) throw numerical_error("Indeterminate", r.note);
  } else if (mode == "sweep") {
    if (!c.has("c_values") || !c.raw("c_values").is_array()) throw config_error("InvalidValue", "sweep mode needs 'c_values'");
    std::vector<double> cs;
    for (const auto& v : c.raw("c_values")) {
      if (!v.is_number()) throw config_error("InvalidValue", "'c_values' entries must be numbers");
      cs.push_back(v.get<double>());
    }
    const auto runs = classify_sweep(cs, Q, P, opt, unsigned(c.integer("workers", 1)));
    write_runs_csv(csv, runs);
    run.write_text("runs.csv", csv.str());
    json verdicts = json::array();
    for (const auto& r : runs) verdicts.push_back({{"c", r.c}, {"verdict", r.verdict.label()}});
    h["verdicts"] = verdicts;
    std::cout << runs.size() << " runs classified\n";
  } else {
    throw config_error("InvalidValue", "mode must be bisect or sweep");
  }
}

inline void cmd_stability(Run& run, const json& cfg) {
  const Config c(cfg, keys({kPhysicsKeys, kGridKeys, kEvolveKeys, kFlowKeys}, {"perturbation"}));
  const PhysParams P = physics(c);
  const GridSpec g = grid_from(c, P.dim, 6.0, default_points(P.dim));
  run.set_grid(g);
  warn_regime(run, P);
  const ComplexField Q = run_flow(run, c, g, P, c.num("c", 1.0)).field;
  const auto probe = stability_probe(Q, P, c.num("perturbation", 1e-2), evolve_options(c),
                                     std::uint64_t(c.integer("seed", 1)));
  std::ostringstream os;
  os << "t,orbit_distance\n";
  for (std::size_t i = 0; i < probe.times.size(); ++i) os << fmt(probe.times[i]) << "," << fmt(probe.distances[i]) << "\n";
  run.write_text("orbit_distance.csv", os.str());
  auto& h = run.headline();
  h["initial_distance"] = probe.initial_distance;
  h["max_distance"] = probe.max_distance;
  h["max_ratio"] = probe.max_ratio;
  h["verdict"] = probe.verdict.label();
  std::cout << "max orbit distance ratio " << fmt(probe.max_ratio) << "\n";
}

using Handler = void (*)(Run&, const json&);

inline const std::map<std::string, Handler>& commands() {
  static const std::map<std::string, Handler> m = {
      {"shoot", cmd_shoot},
      {"groundstate", cmd_groundstate},
      {"evolve", cmd_evolve},
      {"vortex-sweep", cmd_vortex_sweep},
      {"check-inequalities", cmd_check_inequalities},
      {"gauge-check", cmd_gauge_check},
      {"scan", cmd_scan},
      {"regime", cmd_regime},
      {"stability", cmd_stability},
  };
  return m;
}

inline json error_record(const Error& e) {
  const char* cls = e.error_class() == ErrorClass::Config ? "config"
                    : e.error_class() == ErrorClass::Numerical ? "numerical"
                                                               : "io";
  return {{"error_class", cls}, {"code", e.code()}, {"message", e.what()}, {"exit_code", exit_code_for(e.error_class())}};
}

/// Writes error.json for an error raised before a run directory existed.
inline int run_command_failure(const fs::path& out_dir, const Error& e) {
  const json rec = error_record(e);
  std::cerr << rec.dump() << "\n";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!ec) {
    std::ofstream os(out_dir / "error.json");
    if (os) os << rec.dump(2) << "\n";
  }
  return exit_code_for(e.error_class());
}

/// Runs one subcommand; returns the exit status. Errors become error.json in
/// the output directory (when it can be created) and a JSON line on stderr.
inline int run_command(const std::string& command, json cfg, const fs::path& out_dir) {
  std::unique_ptr<Run> run;
  try {
    const auto it = commands().find(command);
    if (it == commands().end()) throw config_error("UnknownCommand", "unknown subcommand '" + command + "'");
    cfg = apply_preset(std::move(cfg));
    run = std::make_unique<Run>(command, cfg, out_dir);
    it->second(*run, cfg);
    run->write_manifest();
    return 0;
  } catch (const Error& e) {
    const int rc = run_command_failure(out_dir, e);
    if (run) {
      try {
        run->write_manifest();
      } catch (...) {
      }
    }
    return rc;
  } catch (const nlohmann::json::exception& e) {
    return run_command_failure(out_dir, config_error("InvalidConfig", e.what()));
  } catch (const std::bad_alloc&) {
    return run_command_failure(out_dir, numerical_error("OutOfMemory", "allocation failed"));
  }
}

inline json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw io_error("ReadFailed", "cannot open config " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw config_error("InvalidConfig", std::string("config is not valid JSON: ") + e.what());
  }
}

/// Entry point for the rnls executable.
inline int main(int argc, char** argv) {
  CLI::App cli{"Spectral lab for rotating and magnetic nonlinear Schroedinger equations"};
  cli.require_subcommand(1);
  std::string config_path, out_dir = "rnls-out", preset;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  for (const auto& [name, _] : commands()) {
    auto* sub = cli.add_subcommand(name, "run " + name);
    sub->add_option("-c,--config", config_path, "JSON configuration file");
    sub->add_option("-p,--preset", preset, "named preset (see 'rnls presets')");
    sub->add_option("-o,--out", out_dir, "output directory");
    sub->add_option("-s,--set", sets, "override a key: key=JSON value");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed = v, seed_given = true; }, "random seed");
  }
  auto* list = cli.add_subcommand("presets", "list the built-in presets");
  cli.add_flag_callback("--version", [] {
    std::cout << kVersion << "\n";
    std::exit(0);
  }, "print the version");
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (list->parsed()) {
    std::cout << presets().dump(2) << "\n";
    return 0;
  }
  const std::string command = cli.get_subcommands().front()->get_name();
  json cfg;
  try {
    cfg = load_config(config_path);
    if (!preset.empty()) cfg["preset"] = preset;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw config_error("InvalidValue", "--set expects key=value, got '" + s + "'");
      const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
      try {
        cfg[key] = json::parse(val);
      } catch (const json::parse_error&) {
        cfg[key] = val;
      }
    }
    if (seed_given) cfg["seed"] = seed;
  } catch (const Error& e) {
    return run_command_failure(out_dir, e);
  }
  return run_command(command, cfg, out_dir);
}

}  // namespace rnls::app
