// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "polyurn/fixtures.hpp"
#include "polyurn/models/freezing.hpp"
#include "polyurn/spectral.hpp"
#include "test_support.hpp"

namespace polyurn {
namespace {

using testing::throws_code;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

CMat matrix_power(const CMat& m, int k) {
  CMat out = CMat::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) out = out * m;
  return out;
}

// Eigenvalues repeated by multiplicity, sorted by (re, im).
std::vector<Complex> spectrum(const std::vector<EigenCluster>& cs) {
  std::vector<Complex> out;
  for (const auto& c : cs)
    for (int k = 0; k < c.algebraic_multiplicity; ++k) out.push_back(c.value);
  std::sort(out.begin(), out.end(), [](Complex a, Complex b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return out;
}

void expect_projection_identities(const Mat& a, const std::vector<EigenCluster>& cs) {
  const auto q = a.rows();
  const double norm = operator_norm(a);
  CMat sum = CMat::Zero(q, q);
  for (const auto& c : cs) sum += c.projection;
  EXPECT_LE(operator_norm(CMat(sum - CMat::Identity(q, q))), 1e-8 * static_cast<double>(q));
  const CMat ac = a.cast<Complex>();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_LE(operator_norm(CMat(ac * cs[i].projection - cs[i].projection * ac)), 1e-8 * std::max(1.0, norm));
    EXPECT_LE(operator_norm(CMat(cs[i].projection * cs[i].projection - cs[i].projection)), 1e-8);
    for (std::size_t j = 0; j < cs.size(); ++j)
      if (i != j) { EXPECT_LE(operator_norm(CMat(cs[i].projection * cs[j].projection)), 1e-8); }
    const int nu = cs[i].nilpotent_index;
    EXPECT_LE(operator_norm(matrix_power(cs[i].nilpotent_part, nu + 1)), 1e-8 * std::pow(std::max(1.0, norm), nu + 1));
    if (nu > 0) { EXPECT_GT(operator_norm(matrix_power(cs[i].nilpotent_part, nu)), 1e-7 * std::pow(std::max(1.0, norm), nu)); }
  }
}

TEST(Intensity, Polya) { EXPECT_EQ(intensity_matrix(fixtures::polya()), Mat::Identity(2, 2)); }

TEST(Intensity, FreezingK1) {
  Mat expected(4, 4);
  expected << -0.25, 0, 0.75, 0, 0.25, 0, 0, 0, 0.75, 0, -0.25, 0, 0, 0, 0.25, 0;
  EXPECT_LE((intensity_matrix(models::freezing_urn_spec({1, 0.75})) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Intensity, ZeroActivityGivesZeroColumn) {
  for (const auto& fp : fixtures::freezing_grid()) {
    const Mat a = intensity_matrix(models::freezing_urn_spec(fp));
    for (int j = 1; j < a.cols(); j += 2) EXPECT_EQ(a.col(j), Vec::Zero(a.rows()));
  }
}

TEST(EigenStructure, FreezingK1) {
  const auto cs = eigen_structure(intensity_matrix(models::freezing_urn_spec({1, 0.75})));
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_NEAR(cs[0].value.real(), 0.5, 1e-12);
  EXPECT_EQ(cs[0].algebraic_multiplicity, 1);
  EXPECT_NEAR(std::abs(cs[1].value), 0.0, 1e-12);
  EXPECT_EQ(cs[1].algebraic_multiplicity, 2);
  EXPECT_EQ(cs[1].nilpotent_index, 0);
  EXPECT_NEAR(cs[2].value.real(), -1.0, 1e-12);
  EXPECT_EQ(cs[2].algebraic_multiplicity, 1);
}

TEST(EigenStructure, Identity) {
  const auto cs = eigen_structure(Mat::Identity(3, 3));
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].algebraic_multiplicity, 3);
  EXPECT_EQ(cs[0].nilpotent_index, 0);
  EXPECT_LE(operator_norm(CMat(cs[0].projection - CMat::Identity(3, 3))), 1e-12);
}

TEST(EigenStructure, JordanBlock) {
  Mat j(2, 2);
  j << 0.3, 1.0, 0.0, 0.3;
  const auto cs = eigen_structure(j);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].algebraic_multiplicity, 2);
  EXPECT_EQ(cs[0].nilpotent_index, 1);
  EXPECT_NEAR(cs[0].value.real(), 0.3, 1e-7);
}

// The freezing spectrum is 2p-1, 0 with multiplicity K+1 and -1 with
// multiplicity K, the latter a single Jordan block.
TEST(EigenStructure, FreezingGridSpectrum) {
  for (const auto& fp : fixtures::freezing_grid()) {
    const Mat a = intensity_matrix(models::freezing_urn_spec(fp));
    const auto cs = eigen_structure(a);
    std::vector<Complex> expected(static_cast<std::size_t>(fp.K), Complex{-1.0, 0.0});
    expected.insert(expected.end(), static_cast<std::size_t>(fp.K + 1), Complex{0.0, 0.0});
    expected.push_back({2.0 * fp.p - 1.0, 0.0});
    const auto got = spectrum(cs);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LE(std::abs(got[i] - expected[i]), 1e-8) << fp.K << " " << fp.p;
    for (const auto& c : cs)
      if (std::abs(c.value + 1.0) < 1e-6) { EXPECT_EQ(c.nilpotent_index, fp.K - 1); }
    expect_projection_identities(a, cs);
  }
}

TEST(EigenStructure, ComplexPairsAreConjugate) {
  const auto cs = eigen_structure(intensity_matrix(fixtures::cyclic()));
  ASSERT_EQ(cs.size(), 3u);
  CMat pair_sum = CMat::Zero(3, 3);
  for (const auto& c : cs)
    if (std::abs(c.value.imag()) > 1e-9) pair_sum += c.projection;
  EXPECT_LE(pair_sum.imag().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projections, FreezingPrincipalProjection) {
  const UrnSpec spec = models::freezing_urn_spec({1, 0.75});
  const auto cs = eigen_structure(intensity_matrix(spec));
  const Vec v1 = vec({0.5, 0.25, 0.5, 0.25});
  const Mat expected = v1 * spec.activities.transpose();
  EXPECT_LE((cs[0].projection.real() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Projections, IdentityIsSingleProjection) {
  const auto cs = eigen_structure(Mat::Identity(4, 4));
  EXPECT_LE(operator_norm(CMat(cs.at(0).projection - CMat::Identity(4, 4))), 1e-12);
}

// Independent oracle: for symmetric A, P_lambda = sum of u u^T over an
// orthonormal eigenbasis of the eigenvalue.
TEST(Projections, SymmetricMatchesEigenvectorOuterProducts) {
  Stream rng(31, 0, StreamDomain::Fixture);
  for (int trial = 0; trial < 20; ++trial) {
    const int q = 5;
    Mat m(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) m(i, j) = rng.uniform() - 0.5;
    Eigen::HouseholderQR<Mat> qr(m);
    const Mat u = qr.householderQ();
    Vec d(q);
    for (int i = 0; i < q; ++i) d[i] = static_cast<double>(i) + 0.3 * rng.uniform();
    const Mat a = u * d.asDiagonal() * u.transpose();
    const auto cs = eigen_structure(a);
    ASSERT_EQ(cs.size(), static_cast<std::size_t>(q));
    for (const auto& c : cs) {
      Eigen::Index k = 0;
      (d.array() - c.value.real()).abs().minCoeff(&k);
      const Mat oracle = u.col(k) * u.col(k).transpose();
      EXPECT_LE((c.projection - oracle.cast<Complex>()).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

// Non-symmetric oracle: P_k = V e_k e_k^T V^-1 for A = V D V^-1.
TEST(Projections, RandomDiagonalizableMatchesBasis) {
  Stream rng(77, 0, StreamDomain::Fixture);
  for (int trial = 0; trial < 100; ++trial) {
    const auto fx = fixtures::random_diagonalizable(6, rng, trial % 2 == 1);
    const auto cs = eigen_structure(fx.a);
    ASSERT_EQ(cs.size(), 6u);
    const CMat vinv = fx.v.inverse();
    for (const auto& c : cs) {
      Eigen::Index k = 0;
      (fx.d.array() - c.value).abs().minCoeff(&k);
      const CMat oracle = fx.v.col(k) * vinv.row(k);
      EXPECT_LE((c.projection - oracle).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    }
    expect_projection_identities(fx.a, cs);
  }
}

TEST(Projections, BuiltinsSatisfyIdentities) {
  for (const auto& spec : fixtures::builtin_specs()) {
    SCOPED_TRACE(spec.name);
    const Mat a = intensity_matrix(spec);
    expect_projection_identities(a, eigen_structure(a));
  }
}

TEST(Classify, Builtins) {
  EXPECT_EQ(analyze(models::freezing_urn_spec({1, 0.75})).classification, Classification::StrictlySmall);
  EXPECT_NEAR(analyze(models::freezing_urn_spec({1, 0.75})).gap, 0.5, 1e-12);
  EXPECT_EQ(analyze(fixtures::polya()).classification, Classification::DominantNotSimple);
  EXPECT_EQ(analyze(fixtures::critical()).classification, Classification::SmallCritical);
  EXPECT_EQ(analyze(fixtures::cyclic()).classification, Classification::StrictlySmall);
}

TEST(Classify, LargeUrn) {
  // Eigenvalues 1 and 0.8 > 1/2.
  UrnSpec s = fixtures::critical();
  s.replacements[1] = {{1.0, vec({0.2, 0.8})}};
  EXPECT_EQ(analyze(s).classification, Classification::Large);
}

TEST(PrincipalPair, FreezingClosedForms) {
  const auto k1 = analyze(models::freezing_urn_spec({1, 0.75}));
  ASSERT_TRUE(k1.v1.has_value());
  EXPECT_LE((*k1.v1 - vec({0.5, 0.25, 0.5, 0.25})).cwiseAbs().maxCoeff(), 1e-12);
  const auto k2 = analyze(models::freezing_urn_spec({2, 0.75}));
  EXPECT_LE((*k2.v1 - vec({0.5, 0.25, 0.25, 0.125, 0.25, 0.125})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PrincipalPair, PolyaIsNotSimple) {
  EXPECT_TRUE(throws_code([] { principal_pair(Mat::Identity(2, 2), Vec::Ones(2), 1.0); }, ErrorCode::NotSimple));
  EXPECT_FALSE(analyze(fixtures::polya()).v1.has_value());
}

TEST(PrincipalPair, EigenpairResidualsOnGrid) {
  for (const auto& fp : fixtures::freezing_grid()) {
    const UrnSpec spec = models::freezing_urn_spec(fp);
    const Mat a = intensity_matrix(spec);
    const double b = balance_constant(spec).b;
    const auto pp = principal_pair(a, spec.activities, b);
    EXPECT_LE((a * pp.v1 - b * pp.v1).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(std::abs(spec.activities.dot(pp.v1) - 1.0), 1e-12);
  }
}

TEST(LeftEigenvector, ActivitiesAreLeftEigenvector) {
  for (const auto& spec : fixtures::builtin_specs()) {
    const Mat a = intensity_matrix(spec);
    const double b = balance_constant(spec).b;
    EXPECT_LE((spec.activities.transpose() * a - b * spec.activities.transpose()).cwiseAbs().maxCoeff(), 1e-10) << spec.name;
  }
}

TEST(TransitionProduct, EmptyProductIsIdentity) {
  const Mat a = intensity_matrix(models::freezing_urn_spec({1, 0.75}));
  const auto w = omega_sequence(1.0, 0.5, 10);
  EXPECT_EQ(transition_product(a, w, 4, 4), Mat::Identity(4, 4));
}

// omega_k = 2 + k, so F_{0,2} = (I + A/2)(I + A/3) = 2I and
// F_{1,3} = (I + A/3)(I + A/4) = (5/3)I.
TEST(TransitionProduct, PolyaScalarProduct) {
  const auto w = omega_sequence(2.0, 1.0, 5);
  const Mat id = Mat::Identity(2, 2);
  EXPECT_LE((transition_product(id, w, 0, 2) - 2.0 * id).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((transition_product(id, w, 1, 3) - 5.0 / 3.0 * id).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TransitionProduct, BatchMatchesDirect) {
  const Mat a = intensity_matrix(models::freezing_urn_spec({2, 0.6}));
  const auto w = omega_sequence(1.0, 0.2, 40);
  const auto all = transition_products_to(a, w, 40);
  for (std::int64_t l : {0, 1, 7, 39, 40})
    EXPECT_LE((all[static_cast<std::size_t>(l)] - transition_product(a, w, l, 40)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(throws_code([&] { transition_product(a, w, 5, 3); }, ErrorCode::InvalidParams));
}

// ||P_lambda F_{l,n}|| / ((n/l)^{Re lambda / b} (1 + log(n/l))^nu) stays
// bounded over the grid l <= n <= 4096.
TEST(TransitionProduct, EnvelopeIsBounded) {
  const UrnSpec spec = models::freezing_urn_spec({1, 0.75});
  const Mat a = intensity_matrix(spec);
  const double b = 0.5;
  const auto cs = eigen_structure(a);
  const auto w = omega_sequence(1.0, b, 4096);
  for (const auto& c : cs) {
    double lo = 1e300, hi = 0.0;
    for (std::int64_t n = 2; n <= 4096; n *= 2) {
      const auto f = transition_products_to(a, w, n);
      for (std::int64_t l = 1; l <= n; l *= 2) {
        const double ratio = static_cast<double>(n) / static_cast<double>(l);
        const double env = std::pow(ratio, c.value.real() / b) * std::pow(1.0 + std::log(ratio), c.nilpotent_index);
        const double v = operator_norm(CMat(c.projection * f[static_cast<std::size_t>(l)].cast<Complex>())) / env;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    EXPECT_LT(hi, 10.0) << c.value;
    if (std::abs(c.value) > 1e-9) { EXPECT_GT(hi, 0.0); }
  }
}

TEST(Analyze, ReportFields) {
  const auto r = analyze(models::freezing_urn_spec({1, 0.75}));
  EXPECT_NEAR(r.b, 0.5, 1e-15);
  EXPECT_NEAR(r.lambda1, 0.5, 1e-15);
  EXPECT_FALSE(r.strictly_balanced);
  EXPECT_EQ(r.clusters.size(), 3u);
}

}  // namespace
}  // namespace polyurn
