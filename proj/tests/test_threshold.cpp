#include <gtest/gtest.h>

#include <sstream>

#include "rnls/rnls.hpp"

using namespace rnls;

namespace {

PhysParams planar(double omega, double g1, double g2) {
  PhysParams P;
  P.omega = {omega};
  P.gamma = {g1, g2};
  return P;
}

ThresholdRun fake(double c, VerdictKind k) { return {c, {k, 1.0}, 0.0, 0.0}; }

EvolveOptions short_run(double T) {
  EvolveOptions o;
  o.T = T;
  return o;
}

}  // namespace

TEST(Threshold, ZeroMultiplierIsGlobal) {
  const auto P = planar(0.5, 1.0, std::sqrt(2.0));
  const auto g = make_grid(2, 10.0, 64);
  const auto Q = reference_profile(QSource::FreeQ0, P, g);
  EXPECT_EQ(classify_run(0.0, Q, P, short_run(0.2)).verdict.kind, VerdictKind::Global);
}

TEST(Threshold, ScaledInitialConventions) {
  const auto P = planar(0.5, 1.0, std::sqrt(2.0));
  const auto g = make_grid(2, 15.0, 128);
  const auto Q = reference_profile(QSource::FreeQ0, P, g);
  EXPECT_NEAR(mass(scaled_initial(Q, 0.98, ScaleConvention::AmplitudeScale)) / mass(Q), 0.9604, 1e-12);
  EXPECT_NEAR(mass(scaled_initial(Q, 0.98, ScaleConvention::MassScale)), 0.9604, 1e-12);
}

TEST(Threshold, TrappedReferenceHasUnitMass) {
  const auto P = planar(0.5, 2.0, 8.0);
  const auto Q = reference_profile(QSource::TrappedQ, P, make_grid(2, 6.0, 64));
  EXPECT_NEAR(mass(Q), 1.0, 1e-10);
}

TEST(Threshold, InvalidBracketWhenEndpointsAgree) {
  const auto P = planar(0.5, 1.0, std::sqrt(2.0));
  const auto g = make_grid(2, 10.0, 64);
  const auto Q = reference_profile(QSource::FreeQ0, P, g);
  try {
    bisect_threshold(Q, QSource::FreeQ0, P, 0.3, 0.4, 0.05, short_run(0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "InvalidBracket");
    EXPECT_EQ(exit_code_for(e.error_class()), 2);
  }
  EXPECT_THROW(bisect_threshold(Q, QSource::FreeQ0, P, 0.4, 0.3, 0.05), Error);
}

TEST(Threshold, MonotonicityViolationsAreFlagged) {
  ThresholdResult r;
  r.runs = {fake(1.0, VerdictKind::Global), fake(1.2, VerdictKind::Blowup), fake(1.1, VerdictKind::Global)};
  detail::check_monotone(r);
  EXPECT_FALSE(r.indeterminate);
  r.runs.push_back(fake(1.3, VerdictKind::Global));
  detail::check_monotone(r);
  EXPECT_TRUE(r.indeterminate);
  ThresholdResult u;
  u.runs = {fake(1.0, VerdictKind::Global), fake(1.1, VerdictKind::Unresolved)};
  detail::check_monotone(u);
  EXPECT_TRUE(u.indeterminate);
}

TEST(Threshold, CompareToCritical) {
  EXPECT_NEAR(compare_to_critical(2.43, 5.85043).excess, 0.0093, 1e-4);
  EXPECT_NEAR(compare_to_critical(2.418766, 5.85043).excess, 0.0, 1e-6);
  EXPECT_NEAR(compare_to_critical(2.515, 5.85043).excess, 0.0812, 1e-4);
  EXPECT_THROW(compare_to_critical(2.4, 0.0), Error);
}

TEST(Threshold, SweepIsSortedAndMatchesSequentialRuns) {
  const auto P = planar(0.8, 1.0, 2.0);
  const auto g = make_grid(2, 10.0, 64);
  const auto Q = reference_profile(QSource::FreeQ0, P, g);
  const std::vector<double> cs{0.9, 0.3, 0.6};
  const auto runs = classify_sweep(cs, Q, P, short_run(0.2), 2);
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[0].c, 0.3);
  EXPECT_EQ(runs[2].c, 0.9);
  const auto solo = classify_run(0.6, Q, P, short_run(0.2));
  EXPECT_EQ(runs[1].final_grad_norm, solo.final_grad_norm);
  EXPECT_EQ(runs[1].final_linf, solo.final_linf);
}

TEST(Threshold, CsvAndSummary) {
  std::ostringstream os;
  write_runs_csv(os, {fake(2.4, VerdictKind::Global), {2.5, {VerdictKind::Blowup, 0.75}, 10.0, 3.0}});
  std::istringstream is(os.str());
  std::string header, a, b;
  std::getline(is, header);
  std::getline(is, a);
  std::getline(is, b);
  EXPECT_EQ(header, "c,verdict,t_detect,final_grad_norm,final_linf");
  EXPECT_EQ(a.substr(0, 12), "2.4,Global,,");
  EXPECT_EQ(b.substr(0, 16), "2.5,Blowup,0.75,");
  ThresholdResult r;
  r.c_global = 2.4;
  r.c_blowup = 2.5;
  r.c_thresh = 2.45;
  r.runs.resize(4);
  EXPECT_EQ(summary_line(r), "bracket=(2.400000,2.500000) c_thresh=2.450000 runs=4");
}

TEST(Threshold, SubThresholdMassIsGlobal) {
  // initial mass 0.94 M(Q0) on every experiment configuration, each with its
  // own reference profile and grid
  const double r2 = std::sqrt(2.0);
  const double m_q0 = free_ground_state(2).mass;
  const auto free_grid = make_grid(2, 15.0, 256);
  for (auto P : {planar(0.5, 1, r2), planar(0.8, 1, 2)}) {
    const auto run = classify_run(std::sqrt(0.94), reference_profile(QSource::FreeQ0, P, free_grid), P);
    EXPECT_EQ(run.verdict.kind, VerdictKind::Global) << "FreeQ0 Omega=" << P.omega[0] << " gamma2=" << P.gamma[1];
  }
  const auto trapped_grid = make_grid(2, 6.0, 256);
  for (auto P : {planar(0.5, 2, 8), planar(0.8, 1, r2), planar(0.8, 1, 2), planar(0.5, 1, 2)}) {
    const auto run = classify_run(std::sqrt(0.94 * m_q0), reference_profile(QSource::TrappedQ, P, trapped_grid), P);
    EXPECT_EQ(run.verdict.kind, VerdictKind::Global) << "TrappedQ Omega=" << P.omega[0] << " gamma2=" << P.gamma[1];
  }
}

TEST(Stability, SmallPerturbationStaysNearOrbit) {
  const auto P = planar(0.5, 2.0, 8.0);
  const auto g = make_grid(2, 6.0, 64);
  const auto Q = reference_profile(QSource::TrappedQ, P, g);
  const auto probe = stability_probe(Q, P, 1e-2, short_run(0.5), 3);
  EXPECT_NEAR(probe.initial_distance, 1e-2 * std::sqrt(sigma_inner(Q, Q, P).real()), 1e-12);
  EXPECT_LE(probe.max_ratio, 10.0);
  EXPECT_EQ(probe.times.size(), 51u);
}
