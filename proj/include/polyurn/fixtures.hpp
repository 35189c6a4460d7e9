// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "polyurn/models/freezing.hpp"
#include "polyurn/rng.hpp"
#include "polyurn/spectral.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::fixtures {

namespace detail {

inline Vec unit(int q, int i) {
  Vec v = Vec::Zero(q);
  v[i] = 1.0;
  return v;
}

}  // namespace detail

/// Classical two-colour urn: the drawn colour gains one ball.
inline UrnSpec polya() {
  UrnSpec s;
  s.name = "polya";
  s.q = 2;
  s.activities = Vec::Ones(2);
  s.initial = Vec::Ones(2);
  s.replacements = {{{1.0, detail::unit(2, 0)}}, {{1.0, detail::unit(2, 1)}}};
  return s;
}

/// Three-type cyclic urn: drawing type i adds a ball of type i+1 (mod 3).
/// Eigenvalues 1 and exp(+-2 pi i / 3), so it is strictly small.
inline UrnSpec cyclic() {
  UrnSpec s;
  s.name = "cyclic3";
  s.q = 3;
  s.activities = Vec::Ones(3);
  s.initial = Vec::Ones(3);
  for (int i = 0; i < 3; ++i) s.replacements.push_back({{1.0, detail::unit(3, (i + 1) % 3)}});
  return s;
}

/// Two-type triangular urn with eigenvalues 1 and 1/2: the critical boundary.
inline UrnSpec critical() {
  UrnSpec s;
  s.name = "critical2";
  s.q = 2;
  s.activities = Vec::Ones(2);
  s.initial = Vec::Ones(2);
  s.replacements = {{{1.0, detail::unit(2, 0)}}, {{1.0, Vec::Constant(2, 0.5)}}};
  return s;
}

inline std::vector<models::FreezingParams> freezing_grid() {
  std::vector<models::FreezingParams> out;
  for (int k = 1; k <= 3; ++k)
    for (double p : {0.6, 0.75, 0.9}) out.push_back({k, p});
  return out;
}

/// Every built-in spec: the Polya, cyclic and critical fixtures plus the
/// freezing grid K in {1,2,3}, p in {0.6, 0.75, 0.9}.
inline std::vector<UrnSpec> builtin_specs() {
  std::vector<UrnSpec> out{polya(), cyclic(), critical()};
  for (const auto& fp : freezing_grid()) out.push_back(models::freezing_urn_spec(fp));
  return out;
}

/// Random diagonalizable q x q matrix V D V^-1 with separated spectrum:
/// real eigenvalues on a jittered grid of spacing >= 0.5, and, when
/// `complex_pairs` is set, one conjugate pair. Bases with condition number
/// above max_cond are redrawn. Also returns V and D.
struct RandomDiagonalizable {
  Mat a;
  CMat v;
  CVec d;
};

inline RandomDiagonalizable random_diagonalizable(int q, Stream& rng, bool complex_pairs, double max_cond = 100.0) {
  const auto normal = [&] {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  Mat basis(q, q);
  for (;;) {
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) basis(i, j) = normal();
    basis += 2.0 * Mat::Identity(q, q);
    const Vec sv = Eigen::JacobiSVD<Mat>(basis).singularValues();
    if (sv[q - 1] > 0.0 && sv[0] / sv[q - 1] <= max_cond) break;
  }
  Mat block = Mat::Zero(q, q);
  CVec d(q);
  int k = 0;
  if (complex_pairs && q >= 2) {
    const double re = -2.0 + 0.3 * rng.uniform(), im = 0.5 + rng.uniform();
    block(0, 0) = re;
    block(1, 1) = re;
    block(0, 1) = im;
    block(1, 0) = -im;
    d[0] = {re, im};
    d[1] = {re, -im};
    k = 2;
  }
  for (int i = k; i < q; ++i) {
    const double lam = -1.0 + 0.75 * (i - k) + 0.2 * rng.uniform();
    block(i, i) = lam;
    d[i] = lam;
  }
  RandomDiagonalizable out;
  out.a = basis * block * basis.inverse();
  out.d = d;
  // Eigenvectors of the real block: e_i for real entries, e_0 -+ i e_1 for
  // the pair.
  CMat w = CMat::Zero(q, q);
  for (int i = 0; i < q; ++i) w(i, i) = 1.0;
  if (k == 2) {
    w(0, 0) = 1.0;
    w(1, 0) = Complex{0.0, 1.0};
    w(0, 1) = 1.0;
    w(1, 1) = Complex{0.0, -1.0};
  }
  out.v = basis.cast<Complex>() * w;
  return out;
}

}  // namespace polyurn::fixtures
