// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polyurn/ensemble.hpp"
#include "polyurn/error.hpp"
#include "polyurn/rng.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::models {

/// A block of a hooking network: a simple connected graph with a hook vertex.
struct BlockGraph {
  int vertices = 0;
  std::vector<std::pair<int, int>> edges;
  int hook = 0;
  double prob = 1.0;

  int degree(int v) const {
    int d = 0;
    for (const auto& [a, b] : edges) d += (a == v) + (b == v);
    return d;
  }
};

struct HookingParams {
  std::vector<BlockGraph> blocks;
  double chi = 1.0;
  double rho = 1.0;
  /// Number of essential degrees tracked by the census.
  int r = 3;
};

/// Validates the block collection. `simulated` additionally requires rho > 0,
/// without which the first latch cannot be drawn.
inline void check(const HookingParams& params, bool simulated = true) {
  if (params.blocks.empty()) raise(ErrorCode::InvalidParams, "hooking needs at least one block");
  if (!(params.chi >= 0.0)) raise(ErrorCode::InvalidParams, "hooking needs chi >= 0");
  if (simulated && !(params.rho > 0.0))
    raise(ErrorCode::NonpositiveWeight, "hooking needs rho > 0: the lone master hook has weight rho");
  if (!(params.chi + params.rho > 0.0)) raise(ErrorCode::NonpositiveWeight, "hooking needs chi + rho > 0");
  if (params.r < 0) raise(ErrorCode::InvalidParams, "r must be non-negative");
  double total = 0.0;
  for (std::size_t j = 0; j < params.blocks.size(); ++j) {
    const auto& g = params.blocks[j];
    const std::string where = "block " + std::to_string(j + 1) + ": ";
    if (g.vertices < 2) raise(ErrorCode::InvalidParams, where + "needs at least 2 vertices");
    if (g.hook < 0 || g.hook >= g.vertices) raise(ErrorCode::InvalidParams, where + "hook out of range");
    if (!(g.prob >= 0.0)) raise(ErrorCode::InvalidParams, where + "negative probability");
    total += g.prob;
    std::set<std::pair<int, int>> seen;
    std::vector<int> parent(static_cast<std::size_t>(g.vertices));
    for (int v = 0; v < g.vertices; ++v) parent[static_cast<std::size_t>(v)] = v;
    std::function<int(int)> find = [&](int v) {
      auto& p = parent[static_cast<std::size_t>(v)];
      return p == v ? v : (p = find(p));
    };
    for (auto [a, b] : g.edges) {
      if (a < 0 || b < 0 || a >= g.vertices || b >= g.vertices) raise(ErrorCode::InvalidParams, where + "edge out of range");
      if (a == b) raise(ErrorCode::InvalidParams, where + "self-loop");
      if (!seen.insert(std::minmax(a, b)).second) raise(ErrorCode::InvalidParams, where + "repeated edge");
      parent[static_cast<std::size_t>(find(a))] = find(b);
    }
    for (int v = 1; v < g.vertices; ++v)
      if (find(v) != find(0)) raise(ErrorCode::InvalidParams, where + "not connected");
  }
  if (std::abs(total - 1.0) > 1e-12) raise(ErrorCode::InvalidParams, "block probabilities sum to " + std::to_string(total));
}

/// b = sum_j p_j (2 chi |E_j| + rho (|V_j| - 1)).
inline double hooking_balance_constant(const HookingParams& params) {
  check(params, false);
  double b = 0.0;
  for (const auto& g : params.blocks)
    b += g.prob * (2.0 * params.chi * static_cast<double>(g.edges.size()) + params.rho * (g.vertices - 1));
  return b;
}

inline constexpr std::int64_t kDefaultClosureBudget = 1'000'000;

/// The r smallest degrees reachable by non-master vertices: degrees of fresh
/// non-hook block vertices, closed under a latch gaining deg(hook_j).
inline std::vector<int> essential_degrees(const HookingParams& params, int r,
                                          std::int64_t budget = kDefaultClosureBudget) {
  check(params, false);
  std::vector<int> out;
  if (r <= 0) return out;
  std::set<int> increments;
  std::priority_queue<int, std::vector<int>, std::greater<>> frontier;
  for (const auto& g : params.blocks) {
    if (g.prob <= 0.0) continue;
    increments.insert(g.degree(g.hook));
    for (int v = 0; v < g.vertices; ++v)
      if (v != g.hook) frontier.push(g.degree(v));
  }
  std::int64_t pops = 0;
  while (static_cast<int>(out.size()) < r) {
    if (frontier.empty() || ++pops > budget)
      raise(ErrorCode::ClosureBudgetExceeded, "essential degree closure exhausted after " + std::to_string(pops) + " steps");
    const int d = frontier.top();
    frontier.pop();
    if (!out.empty() && out.back() == d) continue;
    out.push_back(d);
    for (int inc : increments) frontier.push(d + inc);
  }
  return out;
}

/// Graph-level hooking network. Vertex 0 is the master hook.
class HookingNetwork {
 public:
  explicit HookingNetwork(const HookingParams& params) : params_(params) {
    check(params_);
    degree_.push_back(0);
    activity_ = params_.rho;
    for (const auto& g : params_.blocks) {
      cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + g.prob);
    }
  }

  /// One hooking step. Returns the activity increment measured from the
  /// degree and vertex changes actually applied.
  double step(Stream& rng) {
    const std::int64_t latch = pick_latch(rng);
    const double u = rng.uniform() * cumulative_.back();
    std::size_t j = 0;
    while (j + 1 < cumulative_.size() && !(u < cumulative_[j])) ++j;
    while (params_.blocks[j].prob <= 0.0) --j;
    const BlockGraph& g = params_.blocks[j];

    const auto base = static_cast<std::int64_t>(degree_.size());
    auto map = [&](int v) -> std::int64_t {
      if (v == g.hook) return latch;
      return base + (v < g.hook ? v : v - 1);
    };
    degree_.resize(degree_.size() + static_cast<std::size_t>(g.vertices - 1), 0);
    std::int64_t degree_gain = 0;
    for (const auto& [a, b] : g.edges) {
      const std::int64_t ma = map(a), mb = map(b);
      ++degree_[static_cast<std::size_t>(ma)];
      ++degree_[static_cast<std::size_t>(mb)];
      endpoints_.push_back(ma);
      endpoints_.push_back(mb);
      degree_gain += 2;
    }
    const double inc = params_.chi * static_cast<double>(degree_gain) + params_.rho * (g.vertices - 1);
    activity_ += inc;
    ++steps_;
    return inc;
  }

  std::int64_t steps() const { return steps_; }
  std::int64_t vertex_count() const { return static_cast<std::int64_t>(degree_.size()); }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(endpoints_.size() / 2); }
  const std::vector<std::int64_t>& degrees() const { return degree_; }
  /// Edge k joins endpoints()[2k] and endpoints()[2k + 1].
  const std::vector<std::int64_t>& endpoints() const { return endpoints_; }
  double activity() const { return activity_; }

  /// sum_u (chi deg(u) + rho), recomputed from scratch.
  double recomputed_activity() const {
    double s = 0.0;
    for (auto d : degree_) s += params_.chi * static_cast<double>(d) + params_.rho;
    return s;
  }

  /// Number of vertices (the master hook included) of each listed degree.
  Vec census(const std::vector<int>& ks) const {
    Vec c = Vec::Zero(static_cast<Eigen::Index>(ks.size()));
    for (auto d : degree_) {
      const auto it = std::lower_bound(ks.begin(), ks.end(), d);
      if (it != ks.end() && *it == d) c[it - ks.begin()] += 1.0;
    }
    return c;
  }

 private:
  // Weight chi deg + rho: a uniform vertex with probability rho V / W,
  // otherwise a uniform endpoint of a uniform edge.
  std::int64_t pick_latch(Stream& rng) {
    const double v = static_cast<double>(degree_.size());
    const double w = params_.rho * v + params_.chi * static_cast<double>(endpoints_.size());
    if (!(w > 0.0)) raise(ErrorCode::NonpositiveWeight, "total hooking weight is not positive");
    if (endpoints_.empty() || rng.uniform() * w < params_.rho * v)
      return static_cast<std::int64_t>(rng.below(degree_.size()));
    return endpoints_[static_cast<std::size_t>(rng.below(endpoints_.size()))];
  }

  HookingParams params_;
  std::vector<double> cumulative_;
  std::vector<std::int64_t> degree_;
  std::vector<std::int64_t> endpoints_;
  double activity_ = 0.0;
  std::int64_t steps_ = 0;
};

struct HookingTrajectory {
  std::vector<int> ks;
  std::vector<std::int64_t> checkpoints;
  std::vector<Vec> census;
  std::vector<double> activity;
  std::vector<double> increments;
};

/// Runs one network for n steps, recording the census over the r essential
/// degrees and the total activity at each checkpoint.
inline HookingTrajectory simulate_hooking(const HookingParams& params, std::int64_t n, std::uint64_t seed,
                                          std::vector<std::int64_t> checkpoints = {}, std::uint64_t stream_index = 0) {
  if (checkpoints.empty()) checkpoints.push_back(n);
  check_checkpoints(checkpoints, n);
  HookingTrajectory out;
  out.ks = essential_degrees(params, params.r);
  out.checkpoints = checkpoints;
  HookingNetwork net(params);
  Stream rng(seed, stream_index, StreamDomain::Hooking);
  std::size_t ck = 0;
  for (std::int64_t step = 0;; ++step) {
    if (ck < checkpoints.size() && checkpoints[ck] == step) {
      out.census.push_back(net.census(out.ks));
      out.activity.push_back(net.activity());
      ++ck;
    }
    if (step == n) break;
    out.increments.push_back(net.step(rng));
  }
  return out;
}

/// Checkpointed censuses of many networks; network t uses stream t of the
/// hooking domain.
struct HookingEnsemble {
  std::vector<int> ks;
  std::vector<std::int64_t> checkpoints;
  std::int64_t reps = 0;
  /// census[(rep * checkpoints + ck) * r + i]
  std::vector<double> census;
  /// activity[rep * checkpoints + ck]
  std::vector<double> activity;
  /// Worst |activity - recomputed activity| seen at any checkpoint.
  double max_bookkeeping_error = 0.0;
  /// Smallest and largest single-step increments seen.
  double min_increment = 0.0, max_increment = 0.0;

  friend bool operator==(const HookingEnsemble&, const HookingEnsemble&) = default;
};

inline HookingEnsemble run_hooking_ensemble(const HookingParams& params, std::int64_t n_max,
                                            const std::vector<std::int64_t>& checkpoints, std::int64_t reps,
                                            std::uint64_t seed, unsigned threads) {
  if (reps < 1) raise(ErrorCode::InvalidParams, "reps must be at least 1");
  check_checkpoints(checkpoints, n_max);
  HookingEnsemble ens;
  ens.ks = essential_degrees(params, params.r);
  ens.checkpoints = checkpoints;
  ens.reps = reps;
  const std::size_t nck = checkpoints.size(), r = ens.ks.size();
  ens.census.assign(static_cast<std::size_t>(reps) * nck * r, 0.0);
  ens.activity.assign(static_cast<std::size_t>(reps) * nck, 0.0);
  std::vector<double> err(static_cast<std::size_t>(reps)), lo(err.size()), hi(err.size());
  parallel_for(reps, threads, [&](std::int64_t t) {
    HookingNetwork net(params);
    Stream rng(seed, static_cast<std::uint64_t>(t), StreamDomain::Hooking);
    const auto ti = static_cast<std::size_t>(t);
    lo[ti] = std::numeric_limits<double>::infinity();
    hi[ti] = -std::numeric_limits<double>::infinity();
    std::size_t ck = 0;
    for (std::int64_t step = 0; ck < nck; ++step) {
      if (checkpoints[ck] == step) {
        const std::size_t slot = ti * nck + ck;
        const Vec c = net.census(ens.ks);
        std::copy(c.data(), c.data() + r, ens.census.begin() + static_cast<std::ptrdiff_t>(slot * r));
        ens.activity[slot] = net.activity();
        err[ti] = std::max(err[ti], std::abs(net.activity() - net.recomputed_activity()));
        if (++ck == nck) break;
      }
      const double inc = net.step(rng);
      lo[ti] = std::min(lo[ti], inc);
      hi[ti] = std::max(hi[ti], inc);
    }
  });
  ens.max_bookkeeping_error = *std::max_element(err.begin(), err.end());
  ens.min_increment = *std::min_element(lo.begin(), lo.end());
  ens.max_increment = *std::max_element(hi.begin(), hi.end());
  return ens;
}

/// A single edge hooked at one endpoint.
inline BlockGraph edge_block(double prob = 1.0) { return {2, {{0, 1}}, 0, prob}; }

/// A triangle hooked at vertex 0.
inline BlockGraph triangle_block(double prob = 1.0) { return {3, {{0, 1}, {1, 2}, {0, 2}}, 0, prob}; }

}  // namespace polyurn::models
