// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "polyurn/models/hooking.hpp"
#include "test_support.hpp"

namespace polyurn {
namespace {

using models::BlockGraph;
using models::HookingParams;
using testing::throws_code;

HookingParams single(BlockGraph g, double chi = 1.0, double rho = 1.0, int r = 3) { return {{std::move(g)}, chi, rho, r}; }

HookingParams mixed() { return {{models::edge_block(0.5), models::triangle_block(0.5)}, 1.0, 1.0, 3}; }

TEST(HookingBalance, Examples) {
  EXPECT_DOUBLE_EQ(models::hooking_balance_constant(single(models::triangle_block(), 1.0, 0.0)), 6.0);
  EXPECT_DOUBLE_EQ(models::hooking_balance_constant(single(models::edge_block(), 0.0, 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(models::hooking_balance_constant(mixed()), 5.5);
  EXPECT_DOUBLE_EQ(models::hooking_balance_constant(single(models::triangle_block())), 8.0);
}

TEST(EssentialDegrees, EdgeBlock) {
  EXPECT_EQ(models::essential_degrees(single(models::edge_block()), 5), (std::vector<int>{1, 2, 3, 4, 5}));
}

TEST(EssentialDegrees, TriangleBlock) {
  EXPECT_EQ(models::essential_degrees(single(models::triangle_block()), 3), (std::vector<int>{2, 4, 6}));
  // The hook position does not matter for a triangle.
  BlockGraph t = models::triangle_block();
  t.hook = 2;
  EXPECT_EQ(models::essential_degrees(single(t), 2), (std::vector<int>{2, 4}));
}

TEST(EssentialDegrees, EmptyAndMixed) {
  EXPECT_TRUE(models::essential_degrees(mixed(), 0).empty());
  EXPECT_EQ(models::essential_degrees(mixed(), 4), (std::vector<int>{1, 2, 3, 4}));
}

TEST(EssentialDegrees, StarBlockHookedAtCentre) {
  // Star with three leaves hooked at the centre: leaves have degree 1 and
  // latches gain 3.
  const BlockGraph star{4, {{0, 1}, {0, 2}, {0, 3}}, 0, 1.0};
  EXPECT_EQ(models::essential_degrees(single(star), 3), (std::vector<int>{1, 4, 7}));
}

TEST(EssentialDegrees, ObservedDegreesAreEssential) {
  const auto params = mixed();
  const auto ks = models::essential_degrees(params, 40);
  models::HookingNetwork net(params);
  Stream rng(4, 0, StreamDomain::Hooking);
  for (int i = 0; i < 300; ++i) net.step(rng);
  const auto& deg = net.degrees();
  for (std::size_t v = 1; v < deg.size(); ++v)
    if (deg[v] <= ks.back()) { EXPECT_TRUE(std::binary_search(ks.begin(), ks.end(), static_cast<int>(deg[v]))) << deg[v]; }
}

TEST(HookingParamsCheck, RejectsBadBlocks) {
  EXPECT_TRUE(throws_code([] { models::check(single(models::edge_block(), 1.0, 0.0)); }, ErrorCode::NonpositiveWeight));
  EXPECT_TRUE(throws_code([] { models::check(single(models::edge_block(), -1.0, 1.0)); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::check(single({3, {{0, 1}}, 0, 1.0})); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::check(single({2, {{0, 0}}, 0, 1.0})); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::check(single({2, {{0, 1}, {1, 0}}, 0, 1.0})); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::check(single({1, {}, 0, 1.0})); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::check(single(models::edge_block(0.7))); }, ErrorCode::InvalidParams));
  EXPECT_TRUE(throws_code([] { models::check(single({2, {{0, 1}}, 5, 1.0})); }, ErrorCode::InvalidParams));
}

TEST(HookingNetwork, TriangleIncrementIsConstant) {
  const auto t = models::simulate_hooking(single(models::triangle_block()), 500, 7, {0, 250, 500});
  for (double inc : t.increments) ASSERT_EQ(inc, 8.0);
  EXPECT_EQ(t.activity[0], 1.0);
  EXPECT_EQ(t.activity[2], 1.0 + 8.0 * 500);
}

TEST(HookingNetwork, BookkeepingIdentity) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    models::HookingNetwork net(mixed());
    Stream rng(12, s, StreamDomain::Hooking);
    double total = 1.0;
    for (int i = 0; i < 400; ++i) {
      const double inc = net.step(rng);
      ASSERT_TRUE(inc == 3.0 || inc == 8.0);
      total += inc;
    }
    EXPECT_EQ(net.activity(), total);
    EXPECT_EQ(net.recomputed_activity(), total);
    EXPECT_EQ(2 * net.edge_count(), [&] {
      std::int64_t d = 0;
      for (auto x : net.degrees()) d += x;
      return d;
    }());
  }
}

TEST(HookingNetwork, UniformAttachmentLeafCountGrowsLinearly) {
  const auto params = single(models::edge_block(), 0.0, 1.0, 1);
  const auto t = models::simulate_hooking(params, 4000, 3, {1000, 2000, 4000});
  ASSERT_EQ(t.ks, (std::vector<int>{1}));
  // A uniform recursive tree has about n/2 leaves.
  for (std::size_t c = 0; c < 3; ++c) {
    const double n = static_cast<double>(t.checkpoints[c]);
    EXPECT_NEAR(t.census[c][0] / n, 0.5, 0.05);
  }
}

// Latch selection is proportional to chi deg + rho: with one edge (master
// hook degree 1, leaf degree 1) both vertices are equally likely.
TEST(HookingNetwork, LatchLawAfterOneStep) {
  const auto params = single(models::edge_block(), 1.0, 1.0, 3);
  int master = 0;
  const int reps = 20000;
  for (int t = 0; t < reps; ++t) {
    models::HookingNetwork net(params);
    Stream rng(5, static_cast<std::uint64_t>(t), StreamDomain::Hooking);
    net.step(rng);
    net.step(rng);
    master += net.degrees()[0] == 2;
  }
  EXPECT_NEAR(static_cast<double>(master) / reps, 0.5, 4.0 * std::sqrt(0.25 / reps));
}

TEST(HookingEnsemble, MeanIncrementAndDeterminism) {
  const auto params = mixed();
  const auto a = models::run_hooking_ensemble(params, 512, {256, 512}, 400, 9, 1);
  const auto b = models::run_hooking_ensemble(params, 512, {256, 512}, 400, 9, 4);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.max_bookkeeping_error, 0.0);
  EXPECT_EQ(a.min_increment, 3.0);
  EXPECT_EQ(a.max_increment, 8.0);
  double mean = 0.0;
  for (std::int64_t r = 0; r < a.reps; ++r) mean += (a.activity[static_cast<std::size_t>(r) * 2 + 1] - 1.0) / 512.0;
  mean /= static_cast<double>(a.reps);
  // Each increment is 3 or 8 with probability 1/2: sd 2.5 per step.
  EXPECT_NEAR(mean, 5.5, 4.0 * 2.5 / std::sqrt(512.0 * 400.0));
}

}  // namespace
}  // namespace polyurn
