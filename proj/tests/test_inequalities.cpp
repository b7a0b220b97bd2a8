#include <gtest/gtest.h>

#include <numbers>

#include "rnls/rnls.hpp"

using namespace rnls;
using std::numbers::pi;

namespace {

PhysParams planar(double omega) {
  PhysParams P;
  P.omega = {omega};
  P.gamma = {1.0, 1.0};
  return P;
}

const RadialProfile& q0() {
  static const RadialProfile q = free_ground_state(2, std::sqrt(2.0) * 15.0);
  return q;
}

}  // namespace

TEST(GaussianMoment, ClosedValues) {
  EXPECT_NEAR(gaussian_moment(0, 1), std::sqrt(pi), 1e-15);
  EXPECT_NEAR(gaussian_moment(1, 1), std::sqrt(pi) / 2, 1e-15);
  EXPECT_NEAR(gaussian_moment(2, 2), 3 * std::sqrt(pi) / (16 * std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(gaussian_moment(2, 2), 0.2349964, 1e-7);
}

TEST(GaussianMoment, MatchesGridQuadrature) {
  const auto g = make_grid(1, 20.0, 1024);
  for (int n = 0; n <= 8; ++n)
    for (double a : {0.5, 1.0, 2.0}) {
      const auto f = sample(g, [&](const Point& x) { return Complex(std::pow(x[0], 2 * n) * std::exp(-a * x[0] * x[0]), 0.0); });
      const double want = gaussian_moment(n, a);
      EXPECT_NEAR(integrate(f).real() / want, 1.0, 1e-10) << "n=" << n << " a=" << a;
    }
}

TEST(GaussianMoment, DomainErrors) {
  EXPECT_THROW(gaussian_moment(-0.5, 1.0), Error);
  EXPECT_THROW(gaussian_moment(1.0, 0.0), Error);
  EXPECT_TRUE(std::isfinite(gaussian_moment(200.0, 50.0)));
}

TEST(GagliardoNirenberg, EqualityAtFreeGroundState) {
  const auto g = make_grid(2, 15.0, 256);
  const auto r = check_gn(lift_to_grid(q0(), g, 1.0), planar(0.0), q0().norm());
  EXPECT_NEAR(r.ratio, 1.0, 1e-3);
}

TEST(GagliardoNirenberg, StrictForRandomFields) {
  const auto g = make_grid(2, 10.0, 64);
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const auto r = check_gn(random_enveloped_field(g, rng), planar(0.0), q0().norm());
    EXPECT_LT(r.ratio, 1.0);
  }
}

TEST(GagliardoNirenberg, Invariances) {
  const auto g = make_grid(2, 10.0, 128);
  std::mt19937_64 rng(78);
  const auto P = planar(0.0);
  const auto u = random_enveloped_field(g, rng);
  const double base = check_gn(u, P, q0().norm()).ratio;
  ComplexField scaled = u;
  scaled *= Complex(3.7, 0.0);
  EXPECT_NEAR(check_gn(scaled, P, q0().norm()).ratio, base, 1e-10 * base);
  ComplexField phased = u;
  phased *= std::polar(1.0, 0.9);
  EXPECT_NEAR(check_gn(phased, P, q0().norm()).ratio, base, 1e-10 * base);
  // quarter-turn rotation of the grid samples: (x, y) -> (-y, x)
  ComplexField turned(g);
  const std::size_t n = g.points[0];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) turned[((n - j) % n) * n + i] = u[i * n + j];
  EXPECT_NEAR(check_gn(turned, P, q0().norm()).ratio, base, 1e-10 * base);
}

TEST(GagliardoNirenberg, ContractErrors) {
  const auto g = make_grid(2, 10.0, 32);
  EXPECT_THROW(check_gn(ComplexField(g), planar(0.0), 2.0), Error);
  auto P = planar(0.0);
  P.p = 2.5;
  std::mt19937_64 rng(1);
  EXPECT_THROW(check_gn(random_enveloped_field(g, rng), P, 2.0), Error);
}

TEST(Diamagnetic, EqualityForPositiveGaussian) {
  const auto g = make_grid(2, 12.0, 128);
  const auto u = sample(g, [](const Point& x) { return Complex(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])), 0.0); });
  Matrix zero;
  zero.dim = 2;
  EXPECT_NEAR(check_diamagnetic(u, zero).ratio, 1.0, 1e-6);
}

TEST(Diamagnetic, StrictForVortex) {
  const auto g = make_grid(2, 15.0, 256);
  PhysParams P;
  P.omega = {0.0};
  P.gamma = {1.0, 1.0};
  const auto psi = make_vortex({VortexVariant::Iso2D, 2, P}, g);
  Matrix zero;
  zero.dim = 2;
  const auto r = check_diamagnetic(psi, zero);
  EXPECT_LT(r.ratio, 0.99);
  EXPECT_TRUE(r.satisfied);
}

TEST(Diamagnetic, RandomFieldsUnderRotation) {
  const auto g = make_grid(2, 10.0, 64);
  std::mt19937_64 rng(79);
  const Matrix M = rotation_matrix(planar(0.7));
  for (int i = 0; i < 200; ++i) {
    const auto r = check_diamagnetic(random_enveloped_field(g, rng), M);
    EXPECT_TRUE(r.satisfied);
    EXPECT_LE(r.ratio, 1.0 + 1e-6);
  }
}
