// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "polyurn/error.hpp"
#include "polyurn/rng.hpp"
#include "polyurn/urn.hpp"

namespace polyurn {

/// Default worker count: $POLYURN_THREADS if set, else hardware concurrency.
inline unsigned default_thread_budget() {
  if (const char* env = std::getenv("POLYURN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(index) for index in [0, count) on up to `threads` workers using
/// contiguous blocks. If several indices throw, the error from the lowest
/// index is rethrown, so failures do not depend on scheduling.
template <class Body>
void parallel_for(std::int64_t count, unsigned threads, Body body) {
  if (count <= 0) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::int64_t>(count, 1 << 16))));
  std::mutex mu;
  std::optional<std::int64_t> failed_at;
  std::exception_ptr failure;
  auto run = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failed_at || i < *failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  };
  if (threads == 1) {
    run(0, count);
  } else {
    std::vector<std::jthread> pool;
    const std::int64_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::int64_t begin = static_cast<std::int64_t>(t) * chunk;
      const std::int64_t end = std::min(count, begin + chunk);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Checkpointed compositions of many independent trajectories. Trajectory t
/// uses Stream(master_seed, t), so every row is reproducible on its own.
struct Ensemble {
  std::string spec_name;
  int q = 0;
  std::vector<std::int64_t> checkpoints;
  std::uint64_t master_seed = 0;
  std::int64_t reps = 0;
  /// values[(rep * checkpoints + ck) * q + i]
  std::vector<double> values;
  /// extinct[rep * checkpoints + ck]
  std::vector<std::uint8_t> extinct;

  std::size_t slot(std::int64_t rep, std::size_t ck) const {
    return static_cast<std::size_t>(rep) * checkpoints.size() + ck;
  }
  Eigen::Map<const Vec> x(std::int64_t rep, std::size_t ck) const {
    return Eigen::Map<const Vec>(values.data() + slot(rep, ck) * static_cast<std::size_t>(q), q);
  }
  bool is_extinct(std::int64_t rep, std::size_t ck) const { return extinct[slot(rep, ck)] != 0; }
  std::size_t checkpoint_index(std::int64_t n) const {
    const auto it = std::find(checkpoints.begin(), checkpoints.end(), n);
    if (it == checkpoints.end()) raise(ErrorCode::InvalidParams, "n = " + std::to_string(n) + " is not a checkpoint");
    return static_cast<std::size_t>(it - checkpoints.begin());
  }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

inline Ensemble run_ensemble(const Urn& urn, std::int64_t n_max, const std::vector<std::int64_t>& checkpoints,
                             std::int64_t reps, std::uint64_t master_seed, unsigned thread_budget) {
  if (reps < 1) raise(ErrorCode::InvalidParams, "reps must be at least 1");
  check_checkpoints(checkpoints, n_max);
  Ensemble ens;
  ens.spec_name = urn.spec().name;
  ens.q = urn.q();
  ens.checkpoints = checkpoints;
  ens.master_seed = master_seed;
  ens.reps = reps;
  const std::size_t nck = checkpoints.size();
  ens.values.assign(static_cast<std::size_t>(reps) * nck * static_cast<std::size_t>(ens.q), 0.0);
  ens.extinct.assign(static_cast<std::size_t>(reps) * nck, 0);

  parallel_for(reps, thread_budget, [&](std::int64_t t) {
    try {
      Stream rng(master_seed, static_cast<std::uint64_t>(t));
      UrnState st = urn.initial_state();
      std::size_t ck = 0;
      for (std::int64_t n = 0; ck < nck; ++n) {
        if (checkpoints[ck] == n) {
          const std::size_t s = ens.slot(t, ck);
          std::copy(st.x.data(), st.x.data() + ens.q, ens.values.begin() + static_cast<std::ptrdiff_t>(s * static_cast<std::size_t>(ens.q)));
          ens.extinct[s] = st.extinct ? 1 : 0;
          ++ck;
          if (ck == nck) break;
        }
        if (st.extinct) {
          // Extinct urns never change again; jump to the next checkpoint.
          n = checkpoints[ck] - 1;
          st.n = checkpoints[ck];
          continue;
        }
        urn.advance(st, rng);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "trajectory " + std::to_string(t) + ": " + e.message());
    }
  });
  return ens;
}

}  // namespace polyurn
