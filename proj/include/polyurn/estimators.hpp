// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "polyurn/ensemble.hpp"
#include "polyurn/error.hpp"
#include "polyurn/rng.hpp"
#include "polyurn/urn.hpp"

namespace polyurn {

/// Resamples used for every standard error in this header.
inline constexpr int kDefaultResamples = 200;

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Survivor-only statistics of one checkpoint. Quantities scaled by n use
/// max(n, 1) so that the n = 0 checkpoint stays finite.
struct CheckpointStats {
  std::int64_t n = 0;
  std::int64_t survivors = 0;
  Estimate extinction_rate;
  Vec mean, mean_se;
  Mat cov_over_n, cov_over_n_se;
  std::vector<double> p_list;
  /// Centered L^p norms of |X - mean| over survivors, divided by sqrt(n).
  std::vector<Estimate> lp_norms;
  /// Per coordinate, of (X - mean) / sqrt(n). NaN for constant coordinates.
  Vec skewness, skewness_se, excess_kurtosis, excess_kurtosis_se;
  /// tr(Cov) / (survivors n): the downward bias of the squared L^2 norm
  /// from centering at the sample mean instead of the exact mean.
  double centering_bias = 0.0;
};

struct EstimatorReport {
  std::string spec_name;
  std::int64_t reps = 0;
  std::uint64_t master_seed = 0;
  int resamples = kDefaultResamples;
  std::vector<CheckpointStats> checkpoints;

  const CheckpointStats& at(std::int64_t n) const {
    for (const auto& c : checkpoints)
      if (c.n == n) return c;
    raise(ErrorCode::InvalidParams, "no statistics for n = " + std::to_string(n));
  }
};

namespace detail {

inline double scale_n(std::int64_t n) { return static_cast<double>(std::max<std::int64_t>(n, 1)); }

// Flattened point statistics of one checkpoint over a multiset of
// trajectory indices. Layout: [survival, mean(q), cov/n(q*q), lp(P),
// skew(q), kurt(q)].
inline std::vector<double> checkpoint_point(const Ensemble& ens, std::size_t ck, std::span<const std::int64_t> idx,
                                            std::span<const double> p_list) {
  const int q = ens.q;
  const double n = scale_n(ens.checkpoints[ck]);
  std::vector<double> out(1 + static_cast<std::size_t>(q + q * q) + p_list.size() + 2 * static_cast<std::size_t>(q),
                          std::numeric_limits<double>::quiet_NaN());
  Vec sum = Vec::Zero(q);
  std::int64_t count = 0;
  for (auto r : idx) {
    if (ens.is_extinct(r, ck)) continue;
    sum += ens.x(r, ck);
    ++count;
  }
  out[0] = static_cast<double>(count) / static_cast<double>(idx.size());
  if (count < 2) return out;
  const Vec mean = sum / static_cast<double>(count);
  Mat cov = Mat::Zero(q, q);
  Vec m3 = Vec::Zero(q), m4 = Vec::Zero(q);
  std::vector<double> lp(p_list.size(), 0.0);
  for (auto r : idx) {
    if (ens.is_extinct(r, ck)) continue;
    const Vec d = ens.x(r, ck) - mean;
    cov.noalias() += d * d.transpose();
    const Vec d2 = d.cwiseProduct(d);
    m3 += d2.cwiseProduct(d);
    m4 += d2.cwiseProduct(d2);
    const double norm = std::sqrt(d2.sum());
    for (std::size_t k = 0; k < p_list.size(); ++k) lp[k] += std::pow(norm, p_list[k]);
  }
  const double c = static_cast<double>(count);
  std::size_t o = 1;
  for (int i = 0; i < q; ++i) out[o++] = mean[i];
  const Mat cov_n = cov / ((c - 1.0) * n);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) out[o++] = cov_n(i, j);
  for (std::size_t k = 0; k < p_list.size(); ++k) out[o++] = std::pow(lp[k] / c, 1.0 / p_list[k]) / std::sqrt(n);
  for (int i = 0; i < q; ++i) {
    const double m2 = cov(i, i) / c;
    out[o + static_cast<std::size_t>(i)] = m2 > 0.0 ? (m3[i] / c) / std::pow(m2, 1.5) : std::numeric_limits<double>::quiet_NaN();
    out[o + static_cast<std::size_t>(q + i)] =
        m2 > 0.0 ? (m4[i] / c) / (m2 * m2) - 3.0 : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// Standard deviation across resamples for each flattened component.
inline std::vector<double> resample_sd(const std::vector<std::vector<double>>& draws) {
  if (draws.empty()) return {};
  const std::size_t k = draws.front().size();
  std::vector<double> sd(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0, s2 = 0.0;
    for (const auto& d : draws) {
      s += d[j];
      s2 += d[j] * d[j];
    }
    const double m = s / static_cast<double>(draws.size());
    sd[j] = std::sqrt(std::max(0.0, s2 / static_cast<double>(draws.size()) - m * m) *
                      static_cast<double>(draws.size()) / static_cast<double>(draws.size() - 1));
  }
  return sd;
}

}  // namespace detail

/// Nonparametric bootstrap of a vector statistic of whole trajectories.
/// statistic(idx) receives a resampled multiset of trajectory indices. The
/// resampling stream is keyed by (master_seed, stream_key).
template <class Statistic>
std::vector<double> bootstrap_se(const Ensemble& ens, std::uint64_t stream_key, int resamples, Statistic statistic) {
  Stream rng(ens.master_seed, stream_key, StreamDomain::Bootstrap);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(ens.reps));
  std::vector<std::vector<double>> draws;
  draws.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    for (auto& i : idx) i = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ens.reps)));
    draws.push_back(statistic(std::span<const std::int64_t>(idx)));
  }
  return detail::resample_sd(draws);
}

/// Conditional-on-survival statistics at every checkpoint, with bootstrap
/// standard errors. Throws TooFewSurvivors if a checkpoint has < 2 survivors.
inline EstimatorReport conditional_stats(const Ensemble& ens, std::vector<double> p_list,
                                         int resamples = kDefaultResamples) {
  for (double p : p_list)
    if (!(p >= 2.0)) raise(ErrorCode::InvalidParams, "L^p norms need p >= 2");
  EstimatorReport report;
  report.spec_name = ens.spec_name;
  report.reps = ens.reps;
  report.master_seed = ens.master_seed;
  report.resamples = resamples;
  const int q = ens.q;
  std::vector<std::int64_t> all(static_cast<std::size_t>(ens.reps));
  for (std::int64_t r = 0; r < ens.reps; ++r) all[static_cast<std::size_t>(r)] = r;

  for (std::size_t ck = 0; ck < ens.checkpoints.size(); ++ck) {
    auto stat = [&](std::span<const std::int64_t> idx) { return detail::checkpoint_point(ens, ck, idx, p_list); };
    const auto point = stat(all);
    CheckpointStats cs;
    cs.n = ens.checkpoints[ck];
    cs.survivors = static_cast<std::int64_t>(std::llround(point[0] * static_cast<double>(ens.reps)));
    if (cs.survivors < 2)
      raise(ErrorCode::TooFewSurvivors, std::to_string(cs.survivors) + " survivors at n = " + std::to_string(cs.n));
    const auto se = bootstrap_se(ens, ck, resamples, stat);

    cs.extinction_rate = {1.0 - point[0], se[0]};
    std::size_t o = 1;
    cs.mean.resize(q);
    cs.mean_se.resize(q);
    for (int i = 0; i < q; ++i, ++o) {
      cs.mean[i] = point[o];
      cs.mean_se[i] = se[o];
    }
    cs.cov_over_n.resize(q, q);
    cs.cov_over_n_se.resize(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j, ++o) {
        cs.cov_over_n(i, j) = point[o];
        cs.cov_over_n_se(i, j) = se[o];
      }
    cs.p_list = p_list;
    for (std::size_t k = 0; k < p_list.size(); ++k, ++o) cs.lp_norms.push_back({point[o], se[o]});
    cs.skewness.resize(q);
    cs.skewness_se.resize(q);
    cs.excess_kurtosis.resize(q);
    cs.excess_kurtosis_se.resize(q);
    for (int i = 0; i < q; ++i) {
      cs.skewness[i] = point[o + static_cast<std::size_t>(i)];
      cs.skewness_se[i] = se[o + static_cast<std::size_t>(i)];
      cs.excess_kurtosis[i] = point[o + static_cast<std::size_t>(q + i)];
      cs.excess_kurtosis_se[i] = se[o + static_cast<std::size_t>(q + i)];
    }
    cs.centering_bias = cs.cov_over_n.trace() / static_cast<double>(cs.survivors);
    report.checkpoints.push_back(std::move(cs));
  }
  return report;
}

/// Kolmogorov distance between the empirical law of `sorted` and the
/// standard normal. Handles ties.
inline double ks_distance_to_normal(std::span<const double> sorted) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double phi = 0.5 * std::erfc(-sorted[i] / std::numbers::sqrt2);
    d = std::max({d, std::abs(static_cast<double>(i) / n - phi), std::abs(static_cast<double>(j) / n - phi)});
    i = j;
  }
  return d;
}

struct NormalityCoordinate {
  int coord = 0;
  Estimate skewness;
  Estimate excess_kurtosis;
  /// Kolmogorov distance to the normal fitted by sample mean and variance.
  Estimate ks_distance;
};

struct NormalityReport {
  std::int64_t n = 0;
  std::int64_t samples = 0;
  /// Set for n below the smallest default checkpoint (64).
  bool pre_asymptotic = false;
  std::vector<NormalityCoordinate> coordinates;
};

inline constexpr std::int64_t kMinNormalitySamples = 1000;

namespace detail {

inline std::vector<double> normality_point(std::span<const double> xs) {
  const double c = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= c;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= c;
  m3 /= c;
  m4 /= c;
  if (!(m2 > 0.0)) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, 1.0};
  }
  const double sd = std::sqrt(m2);
  std::vector<double> z(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) z[i] = (xs[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0, ks_distance_to_normal(z)};
}

}  // namespace detail

/// Skewness, excess kurtosis and Kolmogorov distance to a fitted normal for
/// one sample, with bootstrap standard errors.
inline NormalityCoordinate normality_from_samples(std::span<const double> xs, std::uint64_t seed, int coord = 0,
                                                  int resamples = kDefaultResamples) {
  if (static_cast<std::int64_t>(xs.size()) < kMinNormalitySamples)
    raise(ErrorCode::TooFewSurvivors, "normality diagnostics need at least 1000 samples, got " + std::to_string(xs.size()));
  const auto point = detail::normality_point(xs);
  Stream rng(seed, static_cast<std::uint64_t>(coord), StreamDomain::Bootstrap);
  std::vector<double> buf(xs.size());
  std::vector<std::vector<double>> draws;
  for (int b = 0; b < resamples; ++b) {
    for (auto& v : buf) v = xs[static_cast<std::size_t>(rng.below(xs.size()))];
    draws.push_back(detail::normality_point(buf));
  }
  const auto se = detail::resample_sd(draws);
  return {coord, {point[0], se[0]}, {point[1], se[1]}, {point[2], se[2]}};
}

/// Normality diagnostics of the survivor sample at checkpoint n for the given
/// coordinates (all coordinates when empty).
inline NormalityReport normality_diagnostics(const Ensemble& ens, std::int64_t n, std::vector<int> coords = {},
                                             int resamples = kDefaultResamples) {
  const std::size_t ck = ens.checkpoint_index(n);
  if (coords.empty())
    for (int i = 0; i < ens.q; ++i) coords.push_back(i);
  NormalityReport report;
  report.n = n;
  report.pre_asymptotic = n < 64;
  std::vector<std::vector<double>> cols(coords.size());
  for (std::int64_t r = 0; r < ens.reps; ++r) {
    if (ens.is_extinct(r, ck)) continue;
    const auto x = ens.x(r, ck);
    for (std::size_t k = 0; k < coords.size(); ++k) cols[k].push_back(x[coords[k]]);
  }
  report.samples = cols.empty() ? 0 : static_cast<std::int64_t>(cols.front().size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    // (X - mean)/sqrt(n) has the same shape statistics as X.
    report.coordinates.push_back(normality_from_samples(cols[k], ens.master_seed ^ static_cast<std::uint64_t>(n), coords[k], resamples));
  }
  return report;
}

struct GrowthPoint {
  double n = 0.0;
  double value = 0.0;
  double se = 0.0;
};

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

namespace detail {

inline std::pair<double, double> loglog_ls(std::span<const GrowthPoint> pts, std::span<const double> values) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double k = static_cast<double>(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = std::log(pts[i].n);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return {slope, (sy - slope * sx) / k};
}

}  // namespace detail

/// Least-squares slope of log(value) against log(n), with a 95% percentile
/// interval from resampling each log(value) as log(value) + (se / value) N(0, 1).
inline GrowthFit growth_exponent_fit(std::span<const GrowthPoint> pts, std::uint64_t seed = 0,
                                     int resamples = kDefaultResamples) {
  if (pts.size() < 5) raise(ErrorCode::InsufficientRange, "growth fit needs at least 5 checkpoints");
  double lo = pts.front().n, hi = pts.front().n;
  for (const auto& p : pts) {
    if (!(p.n > 0.0) || !(p.value > 0.0)) raise(ErrorCode::InvalidParams, "growth fit needs positive n and values");
    lo = std::min(lo, p.n);
    hi = std::max(hi, p.n);
  }
  if (hi / lo < 100.0) raise(ErrorCode::InsufficientRange, "growth fit needs checkpoints spanning two decades");

  std::vector<double> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) values[i] = pts[i].value;
  const auto [slope, intercept] = detail::loglog_ls(pts, values);

  Stream rng(seed, 0, StreamDomain::Bootstrap);
  std::vector<double> slopes;
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      // Box-Muller; 1 - u keeps the log argument in (0, 1].
      const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      values[i] = pts[i].value * std::exp(pts[i].se / pts[i].value * z);
    }
    slopes.push_back(detail::loglog_ls(pts, values).first);
  }
  std::sort(slopes.begin(), slopes.end());
  const auto q = [&](double f) { return slopes[static_cast<std::size_t>(f * static_cast<double>(slopes.size() - 1))]; };
  return {slope, intercept, std::min(slope, q(0.025)), std::max(slope, q(0.975))};
}

/// Growth table of the centered L^p norm (entry k of p_list), undoing the
/// 1/sqrt(n) scaling of the report.
inline std::vector<GrowthPoint> lp_growth_table(const EstimatorReport& report, std::size_t k, std::int64_t min_n = 1) {
  std::vector<GrowthPoint> pts;
  for (const auto& c : report.checkpoints) {
    if (c.n < min_n) continue;
    const double s = std::sqrt(static_cast<double>(c.n));
    pts.push_back({static_cast<double>(c.n), c.lp_norms.at(k).value * s, c.lp_norms.at(k).se * s});
  }
  return pts;
}

/// |mean - n lambda1 v1|_inf / sqrt(n) per checkpoint, with the bootstrap SE
/// of the maximizing coordinate.
inline std::vector<GrowthPoint> mean_residual_table(const EstimatorReport& report, double lambda1, const Vec& v1,
                                                    std::int64_t min_n = 1) {
  std::vector<GrowthPoint> pts;
  for (const auto& c : report.checkpoints) {
    if (c.n < min_n) continue;
    const double n = static_cast<double>(c.n);
    const Vec r = (c.mean - n * lambda1 * v1).cwiseAbs();
    Eigen::Index arg = 0;
    const double m = r.maxCoeff(&arg);
    pts.push_back({n, m / std::sqrt(n), c.mean_se[arg] / std::sqrt(n)});
  }
  return pts;
}

/// Root-mean-square of S_n - omega_n over survivors at each checkpoint, with
/// bootstrap SE.
inline std::vector<GrowthPoint> activity_deviation_table(const Ensemble& ens, const Urn& urn, std::int64_t min_n = 1,
                                                         int resamples = kDefaultResamples) {
  std::vector<GrowthPoint> pts;
  const Vec& a = urn.spec().activities;
  std::vector<std::int64_t> all(static_cast<std::size_t>(ens.reps));
  for (std::int64_t r = 0; r < ens.reps; ++r) all[static_cast<std::size_t>(r)] = r;
  for (std::size_t ck = 0; ck < ens.checkpoints.size(); ++ck) {
    const std::int64_t n = ens.checkpoints[ck];
    if (n < min_n) continue;
    const double omega = urn.omega(n);
    auto stat = [&](std::span<const std::int64_t> idx) {
      double s2 = 0.0;
      std::int64_t c = 0;
      for (auto r : idx) {
        if (ens.is_extinct(r, ck)) continue;
        const double d = a.dot(ens.x(r, ck)) - omega;
        s2 += d * d;
        ++c;
      }
      return std::vector<double>{c > 0 ? std::sqrt(s2 / static_cast<double>(c)) : 0.0};
    };
    const double value = stat(all)[0];
    const auto se = bootstrap_se(ens, 0x5e00 + ck, resamples, stat);
    pts.push_back({static_cast<double>(n), value, se[0]});
  }
  return pts;
}

}  // namespace polyurn
