// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyurn/error.hpp"
#include "polyurn/rng.hpp"

namespace polyurn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tolerance on per-type probability normalization.
inline constexpr double kProbabilityTolerance = 1e-12;
/// Components within this distance of zero are snapped to zero after a step;
/// anything more negative is a tenability violation.
inline constexpr double kTenabilityTolerance = 1e-12;

/// One atom of a finite-support replacement law.
struct Outcome {
  double prob = 0.0;
  Vec delta;
};

/// Declarative description of a generalized Polya urn with finite-support
/// replacement laws. replacements[i] is the law of the vector added when a
/// ball of type i is drawn.
struct UrnSpec {
  std::string name;
  int q = 0;
  Vec activities;
  Vec initial;
  std::vector<std::vector<Outcome>> replacements;
};

struct ValidationReport {
  bool valid = true;
  double initial_activity = 0.0;
  /// Types that can never be drawn.
  std::vector<int> zero_activity_types;
  std::vector<std::string> notes;
};

/// Static checks on a spec. Tenability is checked dynamically by the stepper.
/// Throws MalformedSpec on any structural problem.
inline ValidationReport validate_spec(const UrnSpec& spec) {
  auto fail = [&](const std::string& msg) { raise(ErrorCode::MalformedSpec, "'" + spec.name + "': " + msg); };
  if (spec.q < 2) fail("q must be at least 2");
  const auto q = static_cast<Eigen::Index>(spec.q);
  if (spec.activities.size() != q) fail("activities has wrong length");
  if (spec.initial.size() != q) fail("initial has wrong length");
  if (spec.replacements.size() != static_cast<std::size_t>(spec.q)) fail("replacements must list one law per type");

  ValidationReport report;
  for (int i = 0; i < spec.q; ++i) {
    const double a = spec.activities[i];
    if (!std::isfinite(a) || a < 0.0) fail("activity of type " + std::to_string(i + 1) + " is negative or not finite");
    if (a == 0.0) report.zero_activity_types.push_back(i);
    if (!std::isfinite(spec.initial[i]) || spec.initial[i] < 0.0)
      fail("initial count of type " + std::to_string(i + 1) + " is negative or not finite");

    const auto& law = spec.replacements[static_cast<std::size_t>(i)];
    if (law.empty()) fail("replacement law of type " + std::to_string(i + 1) + " is empty");
    double total = 0.0;
    for (const auto& o : law) {
      if (!std::isfinite(o.prob) || o.prob < 0.0)
        fail("negative probability in law of type " + std::to_string(i + 1));
      if (o.delta.size() != q) fail("replacement vector of type " + std::to_string(i + 1) + " has wrong length");
      if (!o.delta.allFinite()) fail("replacement vector of type " + std::to_string(i + 1) + " is not finite");
      total += o.prob;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      fail("probabilities of type " + std::to_string(i + 1) + " sum to " + std::to_string(total));
  }
  report.initial_activity = spec.activities.dot(spec.initial);
  if (!(report.initial_activity > 0.0)) fail("initial total activity a.X0 must be positive");
  for (int i : report.zero_activity_types) report.notes.push_back("type " + std::to_string(i + 1) + " has zero activity and is never drawn");
  return report;
}

/// q x q matrix whose column j is E[xi_j].
inline Mat mean_replacement(const UrnSpec& spec) {
  Mat m = Mat::Zero(spec.q, spec.q);
  for (int j = 0; j < spec.q; ++j)
    for (const auto& o : spec.replacements[static_cast<std::size_t>(j)]) m.col(j) += o.prob * o.delta;
  return m;
}

struct BalanceInfo {
  double b = 0.0;
  /// a.xi is the same constant on every positive-probability atom of every
  /// drawable type.
  bool strictly_balanced = false;
  /// a.E[xi_i] per type; NaN for zero-activity types.
  std::vector<double> per_type;
};

/// Balance constant b of an urn balanced in expectation.
inline BalanceInfo balance_constant(const UrnSpec& spec, double tol = 1e-9) {
  validate_spec(spec);
  const Mat mean = mean_replacement(spec);
  BalanceInfo info;
  info.per_type.assign(static_cast<std::size_t>(spec.q), std::nan(""));
  std::optional<double> ref;
  bool strict = true;
  for (int i = 0; i < spec.q; ++i) {
    if (spec.activities[i] == 0.0) continue;
    const double v = spec.activities.dot(mean.col(i));
    info.per_type[static_cast<std::size_t>(i)] = v;
    if (!ref) {
      ref = v;
    } else if (std::abs(v - *ref) > tol) {
      raise(ErrorCode::NotBalancedInExpectation,
            "'" + spec.name + "': a.E[xi] is " + std::to_string(*ref) + " for one type and " + std::to_string(v) +
                " for type " + std::to_string(i + 1));
    }
    for (const auto& o : spec.replacements[static_cast<std::size_t>(i)]) {
      if (o.prob > 0.0 && std::abs(spec.activities.dot(o.delta) - v) > tol) strict = false;
    }
  }
  info.b = *ref;  // validate_spec guarantees some positive activity
  if (!(info.b > 0.0)) raise(ErrorCode::NonpositiveB, "'" + spec.name + "': b = " + std::to_string(info.b));
  info.strictly_balanced = strict;
  return info;
}

struct UrnState {
  std::int64_t n = 0;
  Vec x;
  /// Total activity a.x, maintained incrementally.
  double s = 0.0;
  bool extinct = false;
};

/// Per-step record of the martingale-plus-noise split of the increment
/// Delta X_{n-1} = Y_n + Z_n + A X_{n-1} / omega_{n-1}.
struct StepAudit {
  std::optional<int> drawn_type;
  Vec delta;
  Vec y;
  Vec z;
  /// Deterministic normalizer a.X0 + (n-1) b.
  double omega = 0.0;
};

/// Compiled form of a spec used by the steppers: cumulative tables, the
/// mean replacement matrix, and the balance constant when it exists.
class Urn {
 public:
  explicit Urn(UrnSpec spec) : spec_(std::move(spec)) {
    validate_spec(spec_);
    mean_ = mean_replacement(spec_);
    s0_ = spec_.activities.dot(spec_.initial);
    cumulative_.resize(static_cast<std::size_t>(spec_.q));
    for (int i = 0; i < spec_.q; ++i) {
      double c = 0.0;
      for (const auto& o : spec_.replacements[static_cast<std::size_t>(i)]) {
        c += o.prob;
        cumulative_[static_cast<std::size_t>(i)].push_back(c);
      }
    }
    try {
      balance_ = balance_constant(spec_);
    } catch (const Error&) {
      balance_.reset();
    }
  }

  const UrnSpec& spec() const noexcept { return spec_; }
  int q() const noexcept { return spec_.q; }
  const Mat& mean_replacement_matrix() const noexcept { return mean_; }
  const std::optional<BalanceInfo>& balance() const noexcept { return balance_; }
  double initial_activity() const noexcept { return s0_; }

  /// omega_n = a.X0 + n b. Requires balance in expectation.
  double omega(std::int64_t n) const {
    if (!balance_) raise(ErrorCode::NotBalancedInExpectation, "'" + spec_.name + "': omega needs a balance constant");
    return s0_ + static_cast<double>(n) * balance_->b;
  }

  UrnState initial_state() const {
    UrnState st;
    st.x = spec_.initial;
    st.s = s0_;
    st.extinct = !(s0_ > 0.0);
    return st;
  }

  /// E[Delta X | state] = A x / S, zero on extinct states.
  Vec conditional_mean(const UrnState& st) const {
    if (st.extinct) return Vec::Zero(spec_.q);
    return mean_ * spec_.activities.cwiseProduct(st.x) / st.s;
  }

  /// Advances the state by one draw in place. Fills *audit when given.
  void advance(UrnState& st, Stream& rng, StepAudit* audit = nullptr) const {
    const int q = spec_.q;
    if (audit) {
      audit->omega = omega(st.n);
      audit->drawn_type.reset();
    }
    if (st.extinct) {
      ++st.n;
      if (audit) {
        audit->delta = Vec::Zero(q);
        audit->y = Vec::Zero(q);
        audit->z = Vec::Zero(q);
      }
      return;
    }

    Vec cond_mean;
    if (audit) cond_mean = conditional_mean(st);
    const double s_before = st.s;

    const int type = draw_type(st, rng.uniform());
    const auto& law = spec_.replacements[static_cast<std::size_t>(type)];
    const auto& cum = cumulative_[static_cast<std::size_t>(type)];
    const std::size_t k = pick(cum, [&](std::size_t j) { return law[j].prob > 0.0; }, rng.uniform() * cum.back());
    const Vec& delta = law[k].delta;

    if (audit) audit->delta.resize(q);
    double ds = 0.0;
    for (int i = 0; i < q; ++i) {
      const double next = st.x[i] + delta[i];
      if (next < -kTenabilityTolerance) {
        raise(ErrorCode::TenabilityViolation, "'" + spec_.name + "': type " + std::to_string(i + 1) + " would reach " +
                                                  std::to_string(next) + " at step " + std::to_string(st.n + 1));
      }
      double applied = delta[i];
      if (std::abs(next) <= kTenabilityTolerance) {
        applied = -st.x[i];
        st.x[i] = 0.0;
      } else {
        st.x[i] = next;
      }
      ds += spec_.activities[i] * applied;
      if (audit) audit->delta[i] = applied;
    }
    st.s += ds;
    ++st.n;
    if (st.s <= kTenabilityTolerance) {
      st.s = 0.0;
      st.extinct = true;
    }

    if (audit) {
      audit->drawn_type = type;
      audit->y = audit->delta - cond_mean;
      audit->z = ((audit->omega - s_before) / audit->omega) * cond_mean;
    }
  }

  /// Selection probabilities a_i x_i / S; empty on extinct states.
  std::vector<double> selection_probabilities(const UrnState& st) const {
    if (st.extinct) return {};
    std::vector<double> p(static_cast<std::size_t>(spec_.q));
    double total = 0.0;
    for (int i = 0; i < spec_.q; ++i) total += spec_.activities[i] * st.x[i];
    for (int i = 0; i < spec_.q; ++i) p[static_cast<std::size_t>(i)] = spec_.activities[i] * st.x[i] / total;
    return p;
  }

 private:
  int draw_type(const UrnState& st, double u) const {
    thread_local std::vector<double> cum;
    cum.resize(static_cast<std::size_t>(spec_.q));
    double c = 0.0;
    for (int i = 0; i < spec_.q; ++i) {
      c += spec_.activities[i] * st.x[i];
      cum[static_cast<std::size_t>(i)] = c;
    }
    return static_cast<int>(
        pick(cum, [&](std::size_t j) { return spec_.activities[static_cast<Eigen::Index>(j)] * st.x[static_cast<Eigen::Index>(j)] > 0.0; }, u * c));
  }

  // Smallest index whose cumulative weight exceeds target; ties go to the
  // lower index. Falls back to the last admissible index under roundoff.
  template <class Admissible>
  static std::size_t pick(const std::vector<double>& cum, Admissible admissible, double target) {
    for (std::size_t j = 0; j < cum.size(); ++j)
      if (target < cum[j]) return j;
    for (std::size_t j = cum.size(); j-- > 0;)
      if (admissible(j)) return j;
    return cum.size() - 1;
  }

  UrnSpec spec_;
  Mat mean_;
  double s0_ = 0.0;
  std::vector<std::vector<double>> cumulative_;
  std::optional<BalanceInfo> balance_;
};

/// Value-returning single step.
inline std::pair<UrnState, StepAudit> step(const UrnState& state, const Urn& urn, Stream& rng) {
  UrnState next = state;
  StepAudit audit;
  urn.advance(next, rng, urn.balance() ? &audit : nullptr);
  return {std::move(next), std::move(audit)};
}

struct Trajectory {
  std::string spec_name;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
  std::vector<UrnState> checkpoints;
  /// audits[k] describes the step from n = k to n = k + 1.
  std::vector<StepAudit> audits;
};

inline void check_checkpoints(const std::vector<std::int64_t>& checkpoints, std::int64_t n_max) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 0 || checkpoints[i] > n_max)
      raise(ErrorCode::InvalidParams, "checkpoint " + std::to_string(checkpoints[i]) + " outside [0, n_max]");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      raise(ErrorCode::InvalidParams, "checkpoints must be strictly increasing");
  }
}

/// Runs one trajectory; the result is a pure function of (spec, seed, stream_index).
inline Trajectory run_trajectory(const Urn& urn, std::int64_t n_max, const std::vector<std::int64_t>& checkpoints,
                                 std::uint64_t seed, bool capture_audit, std::uint64_t stream_index = 0) {
  check_checkpoints(checkpoints, n_max);
  if (capture_audit && !urn.balance())
    raise(ErrorCode::NotBalancedInExpectation, "'" + urn.spec().name + "': audits need balance in expectation");
  Trajectory traj;
  traj.spec_name = urn.spec().name;
  traj.seed = seed;
  traj.stream_index = stream_index;
  if (capture_audit) traj.audits.resize(static_cast<std::size_t>(n_max));

  Stream rng(seed, stream_index);
  UrnState st = urn.initial_state();
  auto next_ck = checkpoints.begin();
  for (std::int64_t n = 0;; ++n) {
    if (next_ck != checkpoints.end() && *next_ck == n) {
      traj.checkpoints.push_back(st);
      ++next_ck;
    }
    if (n == n_max) break;
    urn.advance(st, rng, capture_audit ? &traj.audits[static_cast<std::size_t>(n)] : nullptr);
  }
  return traj;
}

}  // namespace polyurn
