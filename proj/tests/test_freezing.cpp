// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "polyurn/ensemble.hpp"
#include "polyurn/fixtures.hpp"
#include "polyurn/models/freezing.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/spectral.hpp"
#include "test_support.hpp"

namespace polyurn {
namespace {

using models::FreezingParams;
using testing::throws_code;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(FreezingSpec, MeanReplacementsK1) {
  const Mat m = mean_replacement(models::freezing_urn_spec({1, 0.75}));
  EXPECT_LE((m.col(0) - vec({-0.25, 0.25, 0.75, 0})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((m.col(2) - vec({0.75, 0, -0.25, 0.25})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FreezingSpec, NoFreezingIsStrictlyBalanced) {
  const auto b = balance_constant(models::freezing_urn_spec({1, 1.0}));
  EXPECT_EQ(b.b, 1.0);
  EXPECT_TRUE(b.strictly_balanced);
}

TEST(FreezingSpec, BalanceIsTwoPMinusOne) {
  for (int k = 1; k <= 4; ++k)
    for (double p : {0.55, 0.6, 0.75, 0.9, 1.0})
      EXPECT_NEAR(balance_constant(models::freezing_urn_spec({k, p})).b, 2.0 * p - 1.0, 1e-14);
}

TEST(FreezingSpec, RejectsBadParams) {
  EXPECT_TRUE(throws_code([] { models::freezing_urn_spec({0, 0.75}); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::freezing_urn_spec({1, 0.5}); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::freezing_urn_spec({1, 1.5}); }, ErrorCode::InvalidParams));
}

TEST(FreezingV1, ClosedForms) {
  EXPECT_LE((models::freezing_v1_closed_form({1, 0.75}) - vec({0.5, 0.25, 0.5, 0.25})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((models::freezing_v1_closed_form({2, 0.75}) - vec({0.5, 0.25, 0.25, 0.125, 0.25, 0.125})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FreezingV1, MatchesSpectralPrincipalPair) {
  for (const auto& fp : fixtures::freezing_grid()) {
    const UrnSpec spec = models::freezing_urn_spec(fp);
    const auto pp = principal_pair(intensity_matrix(spec), spec.activities, 2.0 * fp.p - 1.0);
    EXPECT_LE((pp.v1 - models::freezing_v1_closed_form(fp)).cwiseAbs().maxCoeff(), 1e-8) << fp.K << " " << fp.p;
  }
}

TEST(FreezingTree, NoFreezingGivesRecursiveTree) {
  const auto tree = models::simulate_freezing_tree({1, 1.0}, 100, 3);
  EXPECT_EQ(tree.vertices.size(), 101u);
  EXPECT_EQ(tree.active_count(), 101);
  for (std::size_t v = 1; v < tree.vertices.size(); ++v) EXPECT_LT(tree.vertices[v].parent, static_cast<std::int64_t>(v));
}

TEST(FreezingTree, ZeroStepsIsRoot) {
  const auto tree = models::simulate_freezing_tree({2, 0.75}, 0, 1);
  EXPECT_EQ(tree.census(), vec({1, 0, 0, 0, 0, 0}));
}

TEST(FreezingTree, ActivityIsAbsorbedWalk) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto tree = models::simulate_freezing_tree({1, 0.75}, 50, 9, s);
    EXPECT_EQ(tree.active_count(), std::max<std::int64_t>(0, 1 + tree.increment_sum));
    const Vec c = tree.census();
    EXPECT_EQ(c[0] + c[2], static_cast<double>(tree.active_count()));
    EXPECT_EQ(c.sum(), static_cast<double>(tree.vertices.size()));
  }
}

// Tree-level and urn-level exact laws coincide state by state.
TEST(FreezingTree, ExactLawMatchesUrnOracle) {
  for (const FreezingParams fp : {FreezingParams{1, 0.75}, FreezingParams{1, 0.6}, FreezingParams{2, 0.75}}) {
    for (int n = 0; n <= 4; ++n) {
      const auto tree_law = models::enumerate_freezing_tree(fp, n);
      const auto urn = enumeration_oracle(models::freezing_urn_spec(fp), n);
      std::map<std::vector<int>, Rational> urn_law;
      for (const auto& s : urn.states) {
        std::vector<int> key;
        for (const auto& v : s.x) key.push_back(static_cast<int>(v));
        urn_law[key] += s.prob;
      }
      EXPECT_EQ(tree_law, urn_law) << "K=" << fp.K << " p=" << fp.p << " n=" << n;
    }
  }
}

TEST(FreezingTree, CensusMeansMatchUrn) {
  const FreezingParams fp{1, 0.75};
  const int reps = 40000;
  const std::int64_t n = 64;
  Vec sum = Vec::Zero(4), sum2 = Vec::Zero(4);
  for (int t = 0; t < reps; ++t) {
    const Vec c = models::simulate_freezing_tree(fp, n, 31, static_cast<std::uint64_t>(t)).census();
    sum += c;
    sum2 += c.cwiseProduct(c);
  }
  const auto ens = run_ensemble(Urn(models::freezing_urn_spec(fp)), n, {n}, reps, 32, default_thread_budget());
  Vec usum = Vec::Zero(4), usum2 = Vec::Zero(4);
  for (std::int64_t r = 0; r < ens.reps; ++r) {
    const Vec x = ens.x(r, 0);
    usum += x;
    usum2 += x.cwiseProduct(x);
  }
  for (int i = 0; i < 4; ++i) {
    const double m1 = sum[i] / reps, m2 = usum[i] / reps;
    const double v1 = sum2[i] / reps - m1 * m1, v2 = usum2[i] / reps - m2 * m2;
    EXPECT_NEAR(m1, m2, 4.0 * std::sqrt((v1 + v2) / reps)) << "coordinate " << i;
  }
}

}  // namespace
}  // namespace polyurn
