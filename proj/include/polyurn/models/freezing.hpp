// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polyurn/error.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/rng.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::models {

/// Uniform attachment with freezing: each step a uniformly chosen active
/// vertex gains a child with probability p, or freezes with probability 1-p.
/// Outdegrees at or above K share the overflow classes.
struct FreezingParams {
  int K = 1;
  double p = 0.75;
};

inline void check(const FreezingParams& params) {
  if (params.K < 1) raise(ErrorCode::InvalidParams, "freezing model needs K >= 1");
  if (!(params.p > 0.5 && params.p <= 1.0)) raise(ErrorCode::InvalidParams, "freezing model needs p in (1/2, 1]");
}

/// Urn type (0-based) of a vertex: 2m for active and 2m+1 for frozen vertices
/// of outdegree m, with m clipped at K.
inline int freezing_type(const FreezingParams& params, bool active, int outdegree) {
  const int m = outdegree < params.K ? outdegree : params.K;
  return 2 * m + (active ? 0 : 1);
}

/// Urn with 2K+2 types; activity 1 for active classes, 0 for frozen ones.
inline UrnSpec freezing_urn_spec(const FreezingParams& params) {
  check(params);
  const int q = 2 * params.K + 2;
  auto unit = [q](int i) {
    Vec v = Vec::Zero(q);
    v[i] = 1.0;
    return v;
  };
  UrnSpec spec;
  spec.name = "freezing(K=" + std::to_string(params.K) + ",p=" + std::to_string(params.p) + ")";
  spec.q = q;
  spec.activities = Vec::Zero(q);
  spec.initial = unit(0);
  spec.replacements.resize(static_cast<std::size_t>(q));
  for (int m = 0; m <= params.K; ++m) {
    const int active = 2 * m;
    const int frozen = 2 * m + 1;
    spec.activities[active] = 1.0;
    const Vec freeze = unit(frozen) - unit(active);
    // A new active leaf of outdegree 0 appears; the parent moves up one
    // outdegree class unless it already sits in the overflow class.
    const Vec grow = (m < params.K) ? Vec(unit(0) + unit(active + 2) - unit(active)) : unit(0);
    spec.replacements[static_cast<std::size_t>(active)] = {{1.0 - params.p, freeze}, {params.p, grow}};
    spec.replacements[static_cast<std::size_t>(frozen)] = {{1.0, Vec::Zero(q)}};
  }
  return spec;
}

/// Closed-form right eigenvector for lambda1 = 2p - 1 with a.v1 = 1.
inline Vec freezing_v1_closed_form(const FreezingParams& params) {
  check(params);
  const int q = 2 * params.K + 2;
  Vec v(q);
  const double ratio = (1.0 - params.p) / (2.0 * params.p - 1.0);
  for (int m = 0; m <= params.K; ++m) {
    const double active = std::ldexp(1.0, -std::min(m + 1, params.K));
    v[2 * m] = active;
    v[2 * m + 1] = ratio * active;
  }
  return v;
}

struct FreezingVertex {
  bool active = true;
  int outdegree = 0;
  /// -1 for the root.
  std::int64_t parent = -1;
  /// Step at which the vertex froze, -1 while active.
  std::int64_t frozen_at = -1;
};

struct FreezingTree {
  FreezingParams params;
  std::vector<FreezingVertex> vertices;
  std::int64_t steps = 0;
  /// Number of +-1 increments actually applied (steps with an active vertex).
  std::int64_t increments_applied = 0;
  std::int64_t increment_sum = 0;

  std::int64_t active_count() const {
    std::int64_t c = 0;
    for (const auto& v : vertices) c += v.active ? 1 : 0;
    return c;
  }

  /// Degree census in urn coordinates.
  Vec census() const {
    Vec c = Vec::Zero(2 * params.K + 2);
    for (const auto& v : vertices) c[freezing_type(params, v.active, v.outdegree)] += 1.0;
    return c;
  }
};

/// Grows the tree directly, without the urn abstraction.
inline FreezingTree simulate_freezing_tree(const FreezingParams& params, std::int64_t n, std::uint64_t seed,
                                           std::uint64_t stream_index = 0) {
  check(params);
  FreezingTree tree;
  tree.params = params;
  tree.vertices.push_back({});
  std::vector<std::int64_t> active{0};
  Stream rng(seed, stream_index);
  for (std::int64_t step = 1; step <= n; ++step) {
    tree.steps = step;
    if (active.empty()) continue;
    const bool grow = rng.uniform() < params.p;
    const auto slot = static_cast<std::size_t>(rng.below(active.size()));
    const std::int64_t chosen = active[slot];
    ++tree.increments_applied;
    tree.increment_sum += grow ? 1 : -1;
    auto& v = tree.vertices[static_cast<std::size_t>(chosen)];
    if (grow) {
      ++v.outdegree;
      tree.vertices.push_back({true, 0, chosen, -1});
      active.push_back(static_cast<std::int64_t>(tree.vertices.size()) - 1);
    } else {
      v.active = false;
      v.frozen_at = step;
      active[slot] = active.back();
      active.pop_back();
    }
  }
  return tree;
}

/// Exact census law of the tree process after n steps, by expanding every
/// (x_n, chosen vertex) sequence at tree level. Keys are census vectors in
/// urn coordinates.
inline std::map<std::vector<int>, Rational> enumerate_freezing_tree(const FreezingParams& params, int n) {
  check(params);
  const Rational p{params.p};
  const Rational one_minus_p = Rational{1} - p;
  const int q = 2 * params.K + 2;
  std::map<std::vector<int>, Rational> law;

  struct Node {
    bool active;
    int outdegree;
  };
  auto recurse = [&](auto&& self, std::vector<Node>& tree, int depth, const Rational& prob) -> void {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < tree.size(); ++i)
      if (tree[i].active) active.push_back(i);
    if (depth == n || active.empty()) {
      std::vector<int> census(static_cast<std::size_t>(q), 0);
      for (const auto& v : tree) ++census[static_cast<std::size_t>(freezing_type(params, v.active, v.outdegree))];
      law[census] += prob;
      return;
    }
    const Rational pick = Rational{1} / static_cast<int>(active.size());
    for (std::size_t idx : active) {
      if (p > 0) {
        ++tree[idx].outdegree;
        tree.push_back({true, 0});
        self(self, tree, depth + 1, prob * pick * p);
        tree.pop_back();
        --tree[idx].outdegree;
      }
      if (one_minus_p > 0) {
        tree[idx].active = false;
        self(self, tree, depth + 1, prob * pick * one_minus_p);
        tree[idx].active = true;
      }
    }
  };
  std::vector<Node> root{{true, 0}};
  recurse(recurse, root, 0, Rational{1});
  return law;
}

}  // namespace polyurn::models
