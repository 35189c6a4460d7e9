// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "polyurn/fixtures.hpp"
#include "polyurn/models/freezing.hpp"
#include "polyurn/oracle.hpp"
#include "test_support.hpp"

namespace polyurn {
namespace {

using testing::throws_code;

std::map<std::vector<Rational>, Rational> conditional_law(const OracleResult& r) {
  std::map<std::vector<Rational>, Rational> out;
  for (std::size_t i = 0; i < r.states.size(); ++i)
    if (!r.states[i].extinct) out[r.states[i].x] = r.conditional_prob(i);
  return out;
}

std::vector<Rational> rv(std::initializer_list<int> xs) { return {xs.begin(), xs.end()}; }

TEST(Oracle, FreezingTwoSteps) {
  const auto r = enumeration_oracle(models::freezing_urn_spec({1, 0.75}), 2);
  EXPECT_EQ(r.states.size(), 5u);
  EXPECT_EQ(r.survival, Rational(3, 4));
  const auto law = conditional_law(r);
  ASSERT_EQ(law.size(), 4u);
  EXPECT_EQ(law.at(rv({0, 1, 1, 0})), Rational(1, 8));
  EXPECT_EQ(law.at(rv({1, 0, 2, 0})), Rational(3, 8));
  EXPECT_EQ(law.at(rv({1, 0, 0, 1})), Rational(1, 8));
  EXPECT_EQ(law.at(rv({2, 0, 1, 0})), Rational(3, 8));
  EXPECT_EQ(r.conditional_mean, (std::vector<Rational>{Rational(5, 4), Rational(1, 8), Rational(5, 4), Rational(1, 8)}));
  EXPECT_EQ(r.conditional_total_activity, Rational(5, 2));
}

TEST(Oracle, PolyaTwoStepsIsUniform) {
  const auto r = enumeration_oracle(fixtures::polya(), 2);
  const auto law = conditional_law(r);
  ASSERT_EQ(law.size(), 3u);
  for (const auto& x : {rv({3, 1}), rv({2, 2}), rv({1, 3})}) EXPECT_EQ(law.at(x), Rational(1, 3));
  EXPECT_EQ(r.survival, Rational(1));
}

TEST(Oracle, ZeroStepsIsInitialState) {
  const auto r = enumeration_oracle(fixtures::cyclic(), 0);
  ASSERT_EQ(r.states.size(), 1u);
  EXPECT_EQ(r.states[0].prob, Rational(1));
  EXPECT_EQ(r.states[0].x, rv({1, 1, 1}));
}

TEST(Oracle, ProbabilitiesSumToOne) {
  for (const auto& spec : fixtures::builtin_specs()) {
    const auto r = enumeration_oracle(spec, 4);
    Rational total = 0;
    for (const auto& s : r.states) total += s.prob;
    EXPECT_EQ(total, Rational(1)) << spec.name;
  }
}

// Polya urn: the number of type-1 balls after n steps from (1,1) is uniform
// on {1, ..., n+1}.
TEST(Oracle, PolyaIsUniformForLargerN) {
  const auto r = enumeration_oracle(fixtures::polya(), 6);
  ASSERT_EQ(r.states.size(), 7u);
  for (const auto& s : r.states) EXPECT_EQ(s.prob, Rational(1, 7));
}

TEST(Oracle, BudgetIsEnforced) {
  EXPECT_TRUE(throws_code([] { enumeration_oracle(fixtures::cyclic(), 6, 5); }, ErrorCode::StateSpaceTooLarge));
  EXPECT_TRUE(throws_code([] { enumeration_oracle(fixtures::polya(), -1); }, ErrorCode::InvalidParams));
}

}  // namespace
}  // namespace polyurn
