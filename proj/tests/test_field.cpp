#include <gtest/gtest.h>

#include <cstring>
#include <numbers>
#include <random>

#include "rnls/rnls.hpp"

using namespace rnls;
using std::numbers::pi;

namespace {

ComplexField gaussian(const GridSpec& g, double width = 1.0) {
  return sample(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int j = 0; j < g.dim; ++j) r2 += x[j] * x[j];
    return Complex(std::exp(-0.5 * r2 / (width * width)), 0.0);
  });
}

ComplexField random_field(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  ComplexField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = Complex(n01(rng), n01(rng));
  return f;
}

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(Grid, SpacingForDefaultPlanarGrid) {
  const auto g = make_grid(2, 15.0, 256);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.1171875);
  EXPECT_DOUBLE_EQ(g.spacing(1), 0.1171875);
  EXPECT_EQ(g.size(), 256u * 256u);
}

TEST(Grid, CoordinatesStartAtMinusL) {
  const auto g = make_grid(1, 10.0, 8);
  const double want[] = {-10, -7.5, -5, -2.5, 0, 2.5, 5, 7.5};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(g.coordinate(0, i), want[i]);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_EQ(error_code([] { make_grid(2, 15.0, 255); }), "OddPointCount");
  EXPECT_EQ(error_code([] { make_grid(2, 15.0, 4); }), "TooFewPoints");
  EXPECT_EQ(error_code([] { make_grid(2, -1.0, 64); }), "NonPositiveHalfWidth");
  EXPECT_EQ(error_code([] { make_grid(4, 1.0, 64); }), "InvalidDimension");
}

TEST(Grid, WavenumbersInFftOrder) {
  const auto g = make_grid(1, pi, 8);
  EXPECT_DOUBLE_EQ(g.wavenumber(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.wavenumber(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(g.wavenumber(0, 7), -1.0);
  EXPECT_DOUBLE_EQ(std::abs(g.wavenumber(0, 4)), 4.0);
}

TEST(Integrate, GaussianIn2D) {
  const auto g = make_grid(2, 15.0, 256);
  EXPECT_NEAR(integrate(gaussian(g)).real(), 2 * pi, 1e-12);
  EXPECT_NEAR(integrate(density(gaussian(g))), pi, 1e-12);
}

TEST(Integrate, GaussianIn1D) {
  const auto g = make_grid(1, 15.0, 256);
  const auto f = sample(g, [](const Point& x) { return Complex(std::exp(-x[0] * x[0]), 0.0); });
  EXPECT_NEAR(integrate(f).real(), std::sqrt(pi), 1e-12);
}

TEST(Integrate, IsLinear) {
  const auto g = make_grid(2, 5.0, 32);
  const auto f = random_field(g, 1), h = random_field(g, 2);
  const Complex a(0.3, -1.2), b(2.5, 0.1);
  ComplexField combo = f;
  combo *= a;
  combo.axpy(b, h);
  const Complex lhs = integrate(combo), rhs = a * integrate(f) + b * integrate(h);
  EXPECT_LT(std::abs(lhs - rhs), 1e-12 * (std::abs(lhs) + 1.0));
}

TEST(Spectral, PlaneWaveDerivative) {
  const auto g = make_grid(2, pi, 32);
  const double kx = 3.0, ky = -5.0;
  const auto u = sample(g, [&](const Point& x) { return std::polar(1.0, kx * x[0] + ky * x[1]); });
  const auto grad = gradient_spectral(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_LT(std::abs(grad[0][i] - Complex(0, kx) * u[i]), 1e-12 * kx);
    EXPECT_LT(std::abs(grad[1][i] - Complex(0, ky) * u[i]), 1e-12 * std::abs(ky));
  }
}

TEST(Spectral, ProductOfPlaneWaves) {
  // sin(2x) cos(3y): derivative along x is 2 cos(2x) cos(3y).
  const auto g = make_grid(2, pi, 16);
  const auto u = sample(g, [](const Point& x) { return Complex(std::sin(2 * x[0]) * std::cos(3 * x[1]), 0.0); });
  const auto grad = gradient_spectral(u);
  for_each_node(g, [&](std::size_t f, const Point& x) {
    EXPECT_NEAR(grad[0][f].real(), 2 * std::cos(2 * x[0]) * std::cos(3 * x[1]), 1e-10);
    EXPECT_NEAR(grad[1][f].real(), -3 * std::sin(2 * x[0]) * std::sin(3 * x[1]), 1e-10);
  });
}

TEST(Spectral, ConstantHasZeroGradient) {
  const auto g = make_grid(2, 3.0, 16);
  const auto u = sample(g, [](const Point&) { return Complex(2.0, -1.0); });
  for (const auto& c : gradient_spectral(u))
    for (const auto& v : c.values()) EXPECT_LT(std::abs(v), 1e-13);
}

TEST(Spectral, GaussianDerivativeMatchesAnalytic) {
  const auto g = make_grid(2, 15.0, 256);
  const auto u = gaussian(g);
  const auto grad = gradient_spectral(u);
  double err = 0.0;
  for_each_node(g, [&](std::size_t f, const Point& x) { err = std::max(err, std::abs(grad[0][f] + x[0] * u[f])); });
  EXPECT_LE(err, 1e-10);
}

TEST(Spectral, ParsevalOnRandomFields) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto g = make_grid(2, 4.0, 64);
    const auto u = random_field(g, seed);
    EXPECT_NEAR(spectral_mass(u) / mass(u), 1.0, 1e-12);
  }
}

TEST(Spectral, TransformRoundTrip) {
  const auto g = make_grid(3, 2.0, 16);
  const auto u = random_field(g, 9);
  EXPECT_LT(max_difference(from_spectrum(to_spectrum(u)), u), 1e-13);
}

TEST(Norms, ZeroField) {
  PhysParams P;
  P.omega = {0.5};
  P.gamma = {1.0, 2.0};
  const auto n = norms(ComplexField(make_grid(2, 5.0, 32)), P);
  EXPECT_EQ(n.mass, 0.0);
  EXPECT_EQ(n.grad, 0.0);
  EXPECT_EQ(n.sigma, 0.0);
}

TEST(Norms, GaussianMassAndGradient) {
  PhysParams P;
  P.omega = {0.0};
  P.gamma = {0.0, 0.0};
  const auto n = norms(gaussian(make_grid(2, 15.0, 256)), P);
  EXPECT_NEAR(n.mass, pi, 1e-12);
  EXPECT_NEAR(n.grad * n.grad, pi, 1e-10);
  EXPECT_NEAR(n.sigma * n.sigma, 2 * pi, 1e-10);
}

// Snapshot byte layout built by hand: magic, version, d, (N_j, L_j), t, samples.
namespace {
void put(std::vector<unsigned char>& b, const void* p, std::size_t n) {
  const auto* c = static_cast<const unsigned char*>(p);
  b.insert(b.end(), c, c + n);
}
}  // namespace

TEST(Snapshot, EncodingMatchesHandBuiltBytes) {
  static_assert(std::endian::native == std::endian::little);
  const auto g = make_grid(2, 3.5, 8);
  const auto u = random_field(g, 11);
  std::vector<unsigned char> want;
  put(want, "RNLS", 4);
  const std::uint32_t version = 1, d = 2, n = 8;
  put(want, &version, 4);
  put(want, &d, 4);
  for (int j = 0; j < 2; ++j) {
    const double L = 3.5;
    put(want, &n, 4);
    put(want, &L, 8);
  }
  const double t = 0.625;
  put(want, &t, 8);
  for (const auto& v : u.values()) {
    const double re = v.real(), im = v.imag();
    put(want, &re, 8);
    put(want, &im, 8);
  }
  EXPECT_EQ(snapshot::encode(u, t), want);
}

TEST(Snapshot, FileRoundTripIsBitExact) {
  const auto g = make_grid(3, 2.0, 8);
  const auto u = random_field(g, 12);
  const std::string path = ::testing::TempDir() + "/roundtrip.rnls";
  snapshot::write(path, u, 1.25);
  const auto s = snapshot::read(path);
  EXPECT_EQ(s.time, 1.25);
  EXPECT_TRUE(s.field.grid() == g);
  EXPECT_EQ(std::memcmp(s.field.data(), u.data(), u.size() * sizeof(Complex)), 0);
}

TEST(Snapshot, RejectsMalformedInput) {
  const auto g = make_grid(1, 1.0, 8);
  auto bytes = snapshot::encode(ComplexField(g), 0.0);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(error_code([&] { snapshot::decode(bad_magic); }), "MalformedSnapshot");
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_EQ(error_code([&] { snapshot::decode(truncated); }), "MalformedSnapshot");
  auto bad_version = bytes;
  bad_version[4] = 7;
  EXPECT_EQ(error_code([&] { snapshot::decode(bad_version); }), "MalformedSnapshot");
  auto bad_dim = bytes;
  bad_dim[8] = 5;
  EXPECT_EQ(error_code([&] { snapshot::decode(bad_dim); }), "MalformedSnapshot");
  EXPECT_EQ(error_code([] { snapshot::read("/nonexistent/dir/x.rnls"); }), "ReadFailed");
}

TEST(Snapshot, BlownUpFieldsKeepNonFiniteSamples) {
  const auto g = make_grid(1, 1.0, 8);
  ComplexField u(g);
  u[3] = Complex(std::numeric_limits<double>::infinity(), 0.0);
  const auto s = snapshot::decode(snapshot::encode(u, 0.5));
  EXPECT_TRUE(s.field.blown_up());
  EXPECT_TRUE(std::isinf(s.field[3].real()));
}
