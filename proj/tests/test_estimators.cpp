// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "polyurn/estimators.hpp"
#include "polyurn/fixtures.hpp"
#include "polyurn/models/freezing.hpp"
#include "polyurn/oracle.hpp"
#include "test_support.hpp"

namespace polyurn {
namespace {

using testing::throws_code;

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  Stream rng(seed, 0, StreamDomain::Fixture);
  std::vector<double> xs(n);
  for (auto& x : xs) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return xs;
}

TEST(ConditionalStats, PolyaHasNoExtinction) {
  const Urn urn(fixtures::polya());
  const auto ens = run_ensemble(urn, 20, {2, 20}, 4000, 5, 1);
  const auto rep = conditional_stats(ens, {2.0});
  const auto& c = rep.at(20);
  EXPECT_EQ(c.survivors, 4000);
  EXPECT_EQ(c.extinction_rate.value, 0.0);
  Vec plain = Vec::Zero(2);
  for (std::int64_t r = 0; r < ens.reps; ++r) plain += ens.x(r, 1);
  plain /= static_cast<double>(ens.reps);
  EXPECT_LE((c.mean - plain).cwiseAbs().maxCoeff(), 1e-12);
  // Symmetry: the mean is (11, 11) in expectation.
  EXPECT_NEAR(c.mean[0], 11.0, 4.0 * c.mean_se[0]);
}

TEST(ConditionalStats, FreezingMatchesOracle) {
  const UrnSpec spec = models::freezing_urn_spec({1, 0.75});
  const Urn urn(spec);
  const auto ens = run_ensemble(urn, 4, {1, 2, 3, 4}, 100000, 21, default_thread_budget());
  const auto rep = conditional_stats(ens, {2.0, 4.0});
  for (std::int64_t n = 1; n <= 4; ++n) {
    const auto oracle = enumeration_oracle(spec, n);
    const Vec exact = to_double(oracle.conditional_mean);
    const auto& c = rep.at(n);
    for (int i = 0; i < 4; ++i) {
      if (c.mean_se[i] == 0.0)
        EXPECT_EQ(c.mean[i], exact[i]);
      else
        EXPECT_NEAR(c.mean[i], exact[i], 4.0 * c.mean_se[i]) << "n=" << n << " i=" << i;
    }
    EXPECT_NEAR(1.0 - c.extinction_rate.value, static_cast<double>(oracle.survival), 4.0 * c.extinction_rate.se);
  }
}

TEST(ConditionalStats, RejectsBadInputs) {
  const Urn urn(models::freezing_urn_spec({1, 0.6}));
  const auto tiny = run_ensemble(urn, 400, {400}, 3, 1, 1);
  EXPECT_TRUE(throws_code([&] { conditional_stats(tiny, {2.0}); }, ErrorCode::TooFewSurvivors));
  const auto ok = run_ensemble(Urn(fixtures::polya()), 4, {4}, 10, 1, 1);
  EXPECT_TRUE(throws_code([&] { conditional_stats(ok, {1.5}); }, ErrorCode::InvalidParams));
}

TEST(ConditionalStats, StandardErrorsAreDeterministic) {
  const auto ens = run_ensemble(Urn(fixtures::cyclic()), 30, {30}, 500, 2, 1);
  const auto a = conditional_stats(ens, {2.0});
  const auto b = conditional_stats(ens, {2.0});
  EXPECT_EQ(a.at(30).mean_se, b.at(30).mean_se);
  EXPECT_EQ(a.at(30).lp_norms[0].se, b.at(30).lp_norms[0].se);
}

TEST(ConditionalStats, L2NormStabilizes) {
  const Urn urn(models::freezing_urn_spec({1, 0.75}));
  const auto ens = run_ensemble(urn, 4096, {2048, 4096}, 5000, 13, default_thread_budget());
  const auto rep = conditional_stats(ens, {2.0}, 50);
  const double a = rep.at(2048).lp_norms[0].value, b = rep.at(4096).lp_norms[0].value;
  EXPECT_LT(std::abs(b - a) / a, 0.1);
}

TEST(Normality, ExactlyNormalSamplesPass) {
  const auto xs = normal_sample(100000, 4);
  const auto c = normality_from_samples(xs, 1, 0, 50);
  EXPECT_LT(std::abs(c.skewness.value), 0.03);
  EXPECT_LT(std::abs(c.excess_kurtosis.value), 0.06);
  EXPECT_LT(c.ks_distance.value, 0.01);
  EXPECT_GT(c.skewness.se, 0.0);
}

TEST(Normality, SkewedSamplesAreDetected) {
  auto xs = normal_sample(20000, 5);
  for (auto& x : xs) x = std::exp(x);
  const auto c = normality_from_samples(xs, 1, 0, 20);
  EXPECT_GT(c.skewness.value, 1.0);
  EXPECT_GT(c.ks_distance.value, 0.05);
}

TEST(Normality, SmallNIsPreAsymptotic) {
  const auto ens = run_ensemble(Urn(fixtures::polya()), 1, {1}, 2000, 3, 1);
  const auto rep = normality_diagnostics(ens, 1, {0}, 10);
  EXPECT_TRUE(rep.pre_asymptotic);
  EXPECT_EQ(rep.samples, 2000);
  EXPECT_EQ(rep.coordinates.size(), 1u);
}

TEST(Normality, NeedsEnoughSamples) {
  const auto xs = normal_sample(999, 1);
  EXPECT_TRUE(throws_code([&] { normality_from_samples(xs, 1); }, ErrorCode::TooFewSurvivors));
}

TEST(KsDistance, KnownValues) {
  const std::vector<double> zero{0.0};
  EXPECT_NEAR(ks_distance_to_normal(zero), 0.5, 1e-12);
  auto xs = normal_sample(100000, 9);
  std::sort(xs.begin(), xs.end());
  EXPECT_LT(ks_distance_to_normal(xs), 0.01);
  for (auto& x : xs) x += 1.0;
  // sup |Phi(x - 1) - Phi(x)| is attained at x = 1/2.
  EXPECT_NEAR(ks_distance_to_normal(xs), std::erf(0.5 / std::sqrt(2.0)), 0.01);
}

TEST(GrowthFit, LinearDataHasSlopeOne) {
  std::vector<GrowthPoint> pts;
  for (double n = 64; n <= 8192; n *= 2) pts.push_back({n, n, 0.0});
  const auto fit = growth_exponent_fit(pts, 1);
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-10);
  EXPECT_NEAR(fit.ci_low, 1.0, 1e-12);
  EXPECT_NEAR(fit.ci_high, 1.0, 1e-12);
}

TEST(GrowthFit, IntervalCoversNoisySlope) {
  std::vector<GrowthPoint> pts;
  for (double n = 64; n <= 8192; n *= 2) pts.push_back({n, 3.0 * std::sqrt(n), 0.05 * 3.0 * std::sqrt(n)});
  const auto fit = growth_exponent_fit(pts, 2);
  EXPECT_NEAR(fit.slope, 0.5, 1e-12);
  EXPECT_LT(fit.ci_low, 0.5);
  EXPECT_GT(fit.ci_high, 0.5);
  EXPECT_GT(fit.ci_low, 0.4);
  EXPECT_LT(fit.ci_high, 0.6);
}

TEST(GrowthFit, RangeChecks) {
  std::vector<GrowthPoint> few{{1, 1, 0}, {10, 10, 0}, {1000, 1000, 0}};
  EXPECT_TRUE(throws_code([&] { growth_exponent_fit(few); }, ErrorCode::InsufficientRange));
  std::vector<GrowthPoint> narrow;
  for (double n = 64; n <= 1024; n *= 2) narrow.push_back({n, n, 0});
  EXPECT_TRUE(throws_code([&] { growth_exponent_fit(narrow); }, ErrorCode::InsufficientRange));
  std::vector<GrowthPoint> zero;
  for (double n = 1; n <= 1024; n *= 2) zero.push_back({n, 0.0, 0});
  EXPECT_TRUE(throws_code([&] { growth_exponent_fit(zero); }, ErrorCode::InvalidParams));
}

// The 3-type cyclic urn is strictly small, so its centered L2 norm grows like
// sqrt(n).
TEST(GrowthFit, CyclicUrnHasSquareRootGrowth) {
  std::vector<std::int64_t> cks;
  for (std::int64_t n = 16; n <= 4096; n *= 2) cks.push_back(n);
  const auto ens = run_ensemble(Urn(fixtures::cyclic()), 4096, cks, 4000, 6, default_thread_budget());
  const auto rep = conditional_stats(ens, {2.0}, 50);
  const auto fit = growth_exponent_fit(lp_growth_table(rep, 0, 16), 3, 50);
  EXPECT_GE(fit.slope, 0.4);
  EXPECT_LE(fit.slope, 0.6);
}

TEST(Tables, MeanResidualOfPolyaIsZeroForExactMean) {
  EstimatorReport rep;
  for (std::int64_t n : {64, 128}) {
    CheckpointStats c;
    c.n = n;
    c.mean = Vec::Constant(2, 0.5 * static_cast<double>(n));
    c.mean_se = Vec::Ones(2);
    rep.checkpoints.push_back(c);
  }
  const auto pts = mean_residual_table(rep, 1.0, Vec::Constant(2, 0.5));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].value, 0.0);
  EXPECT_NEAR(pts[1].se, 1.0 / std::sqrt(128.0), 1e-15);
}

TEST(Tables, ActivityDeviationVanishesForBalancedUrn) {
  const Urn urn(fixtures::polya());
  const auto ens = run_ensemble(urn, 64, {16, 64}, 100, 1, 1);
  for (const auto& p : activity_deviation_table(ens, urn, 1, 10)) EXPECT_EQ(p.value, 0.0);
}

}  // namespace
}  // namespace polyurn
