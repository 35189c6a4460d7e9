// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polyurn/error.hpp"
#include "polyurn/urn.hpp"

namespace polyurn {

/// Exact rational. Every finite double converts to it without rounding, so
/// spec probabilities and vectors enter the oracle exactly.
using Rational = boost::multiprecision::cpp_rational;

using RationalVector = std::vector<Rational>;

inline RationalVector to_rational(const Vec& v) {
  RationalVector out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.emplace_back(v[i]);
  return out;
}

inline Vec to_double(const RationalVector& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = static_cast<double>(v[i]);
  return out;
}

struct OracleState {
  RationalVector x;
  Rational prob;
  bool extinct = false;
};

/// Exact law of X_n obtained by expanding every outcome sequence.
struct OracleResult {
  std::int64_t n = 0;
  /// Reachable states in lexicographic order of x, with unconditional
  /// probabilities.
  std::vector<OracleState> states;
  /// P(S_k > 0 for all k <= n).
  Rational survival;
  RationalVector conditional_mean;
  /// E[S_n | non-extinction up to n].
  Rational conditional_total_activity;

  /// Probability of state i given non-extinction (zero for extinct states).
  Rational conditional_prob(std::size_t i) const {
    return states[i].extinct ? Rational{0} : Rational{states[i].prob / survival};
  }
};

inline constexpr std::size_t kDefaultNodeBudget = 1'000'000;

/// Exhaustive expansion of the urn dynamics up to step n in exact arithmetic.
/// Throws StateSpaceTooLarge when the number of expanded nodes in a layer
/// exceeds node_budget.
inline OracleResult enumeration_oracle(const UrnSpec& spec, std::int64_t n,
                                       std::size_t node_budget = kDefaultNodeBudget) {
  validate_spec(spec);
  if (n < 0) raise(ErrorCode::InvalidParams, "oracle needs n >= 0");
  const std::size_t q = static_cast<std::size_t>(spec.q);
  const RationalVector a = to_rational(spec.activities);
  struct Atom {
    Rational prob;
    RationalVector delta;
  };
  std::vector<std::vector<Atom>> laws(q);
  for (std::size_t i = 0; i < q; ++i)
    for (const auto& o : spec.replacements[i])
      if (o.prob > 0.0) laws[i].push_back({Rational{o.prob}, to_rational(o.delta)});

  auto activity = [&](const RationalVector& x) {
    Rational s{0};
    for (std::size_t i = 0; i < q; ++i) s += a[i] * x[i];
    return s;
  };

  std::map<RationalVector, Rational> layer{{to_rational(spec.initial), Rational{1}}};
  for (std::int64_t step = 0; step < n; ++step) {
    std::map<RationalVector, Rational> next;
    std::size_t expanded = 0;
    for (const auto& [x, prob] : layer) {
      const Rational s = activity(x);
      if (s == 0) {
        next[x] += prob;
        continue;
      }
      for (std::size_t i = 0; i < q; ++i) {
        const Rational w = a[i] * x[i];
        if (w == 0) continue;
        const Rational pick = prob * w / s;
        for (const auto& atom : laws[i]) {
          RationalVector y = x;
          for (std::size_t j = 0; j < q; ++j) {
            y[j] += atom.delta[j];
            if (y[j] < 0)
              raise(ErrorCode::TenabilityViolation,
                    "'" + spec.name + "': type " + std::to_string(j + 1) + " goes negative at step " + std::to_string(step + 1));
          }
          next[std::move(y)] += pick * atom.prob;
          if (++expanded > node_budget)
            raise(ErrorCode::StateSpaceTooLarge, "more than " + std::to_string(node_budget) + " nodes at step " +
                                                     std::to_string(step + 1));
        }
      }
    }
    layer = std::move(next);
  }

  OracleResult out;
  out.n = n;
  out.survival = 0;
  out.conditional_mean.assign(q, Rational{0});
  out.conditional_total_activity = 0;
  for (const auto& [x, prob] : layer) {
    const Rational s = activity(x);
    const bool extinct = (s == 0);
    out.states.push_back({x, prob, extinct});
    if (extinct) continue;
    out.survival += prob;
    for (std::size_t i = 0; i < q; ++i) out.conditional_mean[i] += prob * x[i];
    out.conditional_total_activity += prob * s;
  }
  if (out.survival > 0) {
    for (auto& m : out.conditional_mean) m /= out.survival;
    out.conditional_total_activity /= out.survival;
  }
  return out;
}

}  // namespace polyurn
