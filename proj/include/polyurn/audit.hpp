// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "polyurn/ensemble.hpp"
#include "polyurn/error.hpp"
#include "polyurn/spectral.hpp"
#include "polyurn/urn.hpp"

namespace polyurn {

/// Residual above which the decomposition audit reports an implementation bug.
inline constexpr double kAuditResidualLimit = 1e-6;

struct AuditCheckpoint {
  std::int64_t n = 0;
  /// |recon - X_n|_inf / max(1, |X_n|_inf).
  double residual = 0.0;
  bool extinct = false;
  /// S_n - omega_n; only meaningful for survivors.
  double activity_deviation = 0.0;
};

struct AuditReport {
  std::string spec_name;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
  std::vector<AuditCheckpoint> checkpoints;
  double max_residual = 0.0;
  double max_abs_z = 0.0;
  /// w_partial[l - 1] = sum_{k <= l} a.Y_k.
  std::vector<double> w_partial;
  bool strictly_balanced = false;
};

/// Transition products F_{l,m} for every checkpoint m, shared by all
/// trajectories of an audit.
class DecompositionAuditor {
 public:
  DecompositionAuditor(const Urn& urn, Mat intensity, std::vector<std::int64_t> checkpoints)
      : urn_(urn), a_(std::move(intensity)), checkpoints_(std::move(checkpoints)) {
    if (!urn_.balance())
      raise(ErrorCode::NotBalancedInExpectation, "'" + urn_.spec().name + "': audit needs balance in expectation");
    if (checkpoints_.empty()) raise(ErrorCode::InvalidParams, "audit needs at least one checkpoint");
    check_checkpoints(checkpoints_, checkpoints_.back());
    const auto omega = omega_sequence(urn_.initial_activity(), urn_.balance()->b, checkpoints_.back());
    for (auto m : checkpoints_) f_.push_back(transition_products_to(a_, omega, m));
  }

  std::int64_t n_max() const { return checkpoints_.back(); }

  AuditReport run(std::uint64_t seed, std::uint64_t stream_index = 0) const {
    const auto traj = run_trajectory(urn_, n_max(), checkpoints_, seed, true, stream_index);
    AuditReport rep;
    rep.spec_name = urn_.spec().name;
    rep.seed = seed;
    rep.stream_index = stream_index;
    rep.strictly_balanced = urn_.balance()->strictly_balanced;
    const Vec& act = urn_.spec().activities;
    double w = 0.0;
    for (const auto& au : traj.audits) {
      rep.max_abs_z = std::max(rep.max_abs_z, au.z.cwiseAbs().maxCoeff());
      w += act.dot(au.y);
      rep.w_partial.push_back(w);
    }
    for (std::size_t c = 0; c < checkpoints_.size(); ++c) {
      const std::int64_t m = checkpoints_[c];
      const auto& f = f_[c];
      Vec recon = f[0] * urn_.spec().initial;
      for (std::int64_t l = 1; l <= m; ++l) {
        const auto& au = traj.audits[static_cast<std::size_t>(l - 1)];
        recon.noalias() += f[static_cast<std::size_t>(l)] * (au.y + au.z);
      }
      const UrnState& st = traj.checkpoints[c];
      AuditCheckpoint ck;
      ck.n = m;
      ck.residual = (recon - st.x).cwiseAbs().maxCoeff() / std::max(1.0, st.x.cwiseAbs().maxCoeff());
      ck.extinct = st.extinct;
      ck.activity_deviation = st.s - urn_.omega(m);
      rep.max_residual = std::max(rep.max_residual, ck.residual);
      rep.checkpoints.push_back(ck);
    }
    if (!(rep.max_residual <= kAuditResidualLimit))
      raise(ErrorCode::ResidualTooLarge, "'" + rep.spec_name + "' stream " + std::to_string(stream_index) +
                                             ": decomposition residual " + std::to_string(rep.max_residual));
    if (rep.strictly_balanced && rep.max_abs_z != 0.0 && rep.max_abs_z > 1e-12 * urn_.omega(n_max()))
      raise(ErrorCode::ResidualTooLarge,
            "'" + rep.spec_name + "': nonzero Z on a strictly balanced urn (" + std::to_string(rep.max_abs_z) + ")");
    return rep;
  }

 private:
  const Urn& urn_;
  Mat a_;
  std::vector<std::int64_t> checkpoints_;
  std::vector<std::vector<Mat>> f_;
};

/// Audits one trajectory of length n; checkpoints default to {n}.
inline AuditReport decomposition_audit(const Urn& urn, const Mat& intensity, std::int64_t n, std::uint64_t seed,
                                       std::vector<std::int64_t> checkpoints = {}, std::uint64_t stream_index = 0) {
  if (checkpoints.empty()) checkpoints.push_back(n);
  if (checkpoints.back() != n) checkpoints.push_back(n);
  return DecompositionAuditor(urn, intensity, std::move(checkpoints)).run(seed, stream_index);
}

/// Audits trajectories 0..count-1 of the given seed.
inline std::vector<AuditReport> audit_many(const Urn& urn, const Mat& intensity, std::int64_t n, std::uint64_t seed,
                                           std::int64_t count, std::vector<std::int64_t> checkpoints = {},
                                           unsigned threads = 1) {
  if (checkpoints.empty() || checkpoints.back() != n) checkpoints.push_back(n);
  const DecompositionAuditor auditor(urn, intensity, std::move(checkpoints));
  std::vector<AuditReport> out(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](std::int64_t t) {
    out[static_cast<std::size_t>(t)] = auditor.run(seed, static_cast<std::uint64_t>(t));
  });
  return out;
}

/// Streaming cross-trajectory moments of Y_l (componentwise) and W_l = a.Y_l.
class MartingaleAccumulator {
 public:
  MartingaleAccumulator(int q, std::int64_t steps)
      : q_(q), steps_(steps), sum_(static_cast<std::size_t>(steps * (q + 1)), 0.0), sum2_(sum_.size(), 0.0) {}

  /// Adds Y_l for l = 1..steps of one trajectory.
  void add(const std::vector<StepAudit>& audits, const Vec& activities, double shift = 0.0) {
    for (std::int64_t l = 0; l < steps_; ++l) {
      const auto& y = audits[static_cast<std::size_t>(l)].y;
      double w = 0.0;
      for (int i = 0; i < q_; ++i) {
        const double v = y[i] + shift;
        put(l, i, v);
        w += activities[i] * v;
      }
      put(l, q_, w);
    }
    ++count_;
  }

  struct Flag {
    std::int64_t step = 0;
    /// Coordinate index; q stands for W.
    int coord = 0;
    double mean = 0.0;
    double se = 0.0;
    bool pass = true;
  };

  std::vector<Flag> flags(double z = 4.0) const {
    std::vector<Flag> out;
    const double c = static_cast<double>(count_);
    for (std::int64_t l = 0; l < steps_; ++l)
      for (int i = 0; i <= q_; ++i) {
        const std::size_t k = index(l, i);
        const double mean = sum_[k] / c;
        const double var = count_ > 1 ? std::max(0.0, (sum2_[k] - c * mean * mean) / (c - 1.0)) : 0.0;
        const double se = std::sqrt(var / c);
        out.push_back({l + 1, i, mean, se, std::abs(mean) <= z * se + 1e-12});
      }
    return out;
  }

  std::int64_t count() const { return count_; }

 private:
  std::size_t index(std::int64_t l, int i) const { return static_cast<std::size_t>(l * (q_ + 1) + i); }
  void put(std::int64_t l, int i, double v) {
    sum_[index(l, i)] += v;
    sum2_[index(l, i)] += v * v;
  }

  int q_;
  std::int64_t steps_;
  std::int64_t count_ = 0;
  std::vector<double> sum_, sum2_;
};

struct MartingaleReport {
  std::int64_t steps = 0;
  std::int64_t reps = 0;
  std::vector<MartingaleAccumulator::Flag> flags;
  std::int64_t failures = 0;
  bool pass() const { return failures == 0; }
};

/// Runs reps audited trajectories of length n and checks that the
/// cross-trajectory mean of every Y_l coordinate and of W_l is within 4
/// standard errors of zero. `shift` offsets every Y and exists for negative
/// controls.
inline MartingaleReport martingale_check(const Urn& urn, std::int64_t n, std::int64_t reps, std::uint64_t seed,
                                         unsigned threads = 1, double shift = 0.0) {
  MartingaleAccumulator acc(urn.q(), n);
  constexpr std::int64_t kBlock = 1024;
  std::vector<std::vector<StepAudit>> block(kBlock);
  for (std::int64_t start = 0; start < reps; start += kBlock) {
    const std::int64_t len = std::min(kBlock, reps - start);
    parallel_for(len, threads, [&](std::int64_t k) {
      block[static_cast<std::size_t>(k)] =
          run_trajectory(urn, n, {}, seed, true, static_cast<std::uint64_t>(start + k)).audits;
    });
    for (std::int64_t k = 0; k < len; ++k) acc.add(block[static_cast<std::size_t>(k)], urn.spec().activities, shift);
  }
  MartingaleReport rep;
  rep.steps = n;
  rep.reps = reps;
  rep.flags = acc.flags();
  for (const auto& f : rep.flags) rep.failures += f.pass ? 0 : 1;
  return rep;
}

}  // namespace polyurn
