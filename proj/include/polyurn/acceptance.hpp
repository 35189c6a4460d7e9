// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polyurn/audit.hpp"
#include "polyurn/ensemble.hpp"
#include "polyurn/estimators.hpp"
#include "polyurn/fixtures.hpp"
#include "polyurn/io.hpp"
#include "polyurn/models/freezing.hpp"
#include "polyurn/models/hooking.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/spectral.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::acceptance {

/// desk: reps 1e5 at the stated tolerances. ci: reps 1e4 with purely
/// statistical thresholds widened by sqrt(10); exact checks are unchanged.
struct Budget {
  std::string name = "desk";
  std::int64_t reps = 100'000;
  std::int64_t hooking_reps = 10'000;
  double stat_mult = 1.0;

  static Budget desk() { return {}; }
  static Budget ci() { return {"ci", 10'000, 1'000, std::sqrt(10.0)}; }
  static Budget parse(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "ci") return ci();
    raise(ErrorCode::UsageError, "unknown budget '" + name + "' (expected desk or ci)");
  }
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

struct Options {
  Budget budget;
  std::uint64_t seed = 20260101;
  unsigned threads = 1;
  /// Empty runs every criterion.
  std::set<int> only;
};

inline std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool pass = true;
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (failures.size() < 4) failures.push_back(what);
    }
  }
  std::string summary(const std::string& ok_detail) const {
    if (pass) return ok_detail;
    std::string s;
    for (const auto& f : failures) s += (s.empty() ? "" : "; ") + f;
    return s;
  }
};

inline std::vector<std::int64_t> pow2_grid(int lo, int hi) {
  std::vector<std::int64_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::int64_t{1} << k);
  return out;
}

inline double spectral_norm(const CMat& m) { return operator_norm(m); }

// Projection identities of one matrix at the acceptance tolerances.
inline void check_projections(const Mat& a, const std::vector<EigenCluster>& clusters, const std::string& label,
                              Check& check) {
  const auto q = a.rows();
  const double norm_a = operator_norm(a);
  const double scale = std::max(norm_a, 1.0);
  const CMat ac = a.cast<Complex>();
  CMat sum = CMat::Zero(q, q);
  for (const auto& c : clusters) sum += c.projection;
  const double resolve = spectral_norm(sum - CMat::Identity(q, q));
  check.expect(resolve <= 1e-8 * static_cast<double>(q), label + ": ||sum P - I|| = " + fmt(resolve));
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (i == j) continue;
      const double cross = spectral_norm(c.projection * clusters[j].projection);
      check.expect(cross <= 1e-8, label + ": ||P P'|| = " + fmt(cross));
    }
    const double comm = spectral_norm(ac * c.projection - c.projection * ac);
    check.expect(comm <= 1e-8 * norm_a, label + ": ||AP - PA|| = " + fmt(comm));
    const double idem = spectral_norm(c.projection * c.projection - c.projection);
    check.expect(idem <= 1e-8 * scale, label + ": ||P^2 - P|| = " + fmt(idem));
    CMat power = c.projection;
    for (int k = 0; k < c.nilpotent_index; ++k) power = power * c.nilpotent_part;
    const double at_nu = spectral_norm(power);
    const double above = spectral_norm(CMat(power * c.nilpotent_part));
    const double threshold = 1e-8 * std::pow(scale, c.nilpotent_index + 1);
    check.expect(above <= threshold, label + ": ||N^(nu+1)|| = " + fmt(above));
    check.expect(at_nu > 10.0 * threshold, label + ": ||N^nu|| = " + fmt(at_nu) + " too small");
  }
}

}  // namespace detail

/// Runs the acceptance criteria. Each criterion reports pass/fail with a
/// one-line detail; runtime limits are part of the pass condition.
class Suite {
 public:
  explicit Suite(Options opt) : opt_(std::move(opt)) {}

  std::vector<CriterionResult> run(const std::function<void(const CriterionResult&)>& on_result = {}) {
    const std::vector<std::tuple<int, const char*, double, std::function<std::string(detail::Check&)>>> table{
        {1, "spectral exactness (freezing)", 1.0, [this](detail::Check& c) { return spectral_exactness(c); }},
        {2, "projection identities", 5.0, [this](detail::Check& c) { return projection_identities(c); }},
        {3, "decomposition audit", 10.0, [this](detail::Check& c) { return decomposition(c); }},
        {4, "oracle agreement", 30.0, [this](detail::Check& c) { return oracle_agreement(c); }},
        {5, "extinction probability", 60.0, [this](detail::Check& c) { return extinction(c); }},
        {6, "mean normalization", 600.0, [this](detail::Check& c) { return mean_normalization(c); }},
        {7, "moment growth exponent", 600.0, [this](detail::Check& c) { return growth_exponent(c); }},
        {8, "CLT diagnostics", 600.0, [this](detail::Check& c) { return clt(c); }},
        {9, "hooking networks", 600.0, [this](detail::Check& c) { return hooking(c); }},
        {10, "determinism and SE scaling", 120.0, [this](detail::Check& c) { return determinism(c); }},
    };
    std::vector<CriterionResult> out;
    for (const auto& [id, name, limit, body] : table) {
      if (!opt_.only.empty() && !opt_.only.count(id)) continue;
      CriterionResult r;
      r.id = id;
      r.name = name;
      r.limit_seconds = limit;
      detail::Check check;
      shared_seconds_ = 0.0;
      const auto t0 = detail::Clock::now();
      try {
        r.detail = body(check);
        r.pass = check.pass;
        if (!check.pass) r.detail = check.summary(r.detail);
      } catch (const Error& e) {
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
      }
      r.seconds = detail::seconds_since(t0) + shared_seconds_;
      if (r.seconds > limit) {
        r.pass = false;
        r.detail += "; runtime " + fmt(r.seconds, 3) + " s exceeds " + fmt(limit, 3) + " s";
      }
      if (on_result) on_result(r);
      out.push_back(std::move(r));
    }
    return out;
  }

  static std::string format(const CriterionResult& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "criterion %2d: %s", r.id, r.pass ? "PASS" : "FAIL");
    return std::string(buf) + "  " + r.name + " [" + fmt(r.seconds, 3) + " s]  " + r.detail;
  }

 private:
  // ---------------------------------------------------------------- 1
  std::string spectral_exactness(detail::Check& check) {
    double worst_eig = 0.0, worst_v = 0.0, worst_norm = 0.0;
    for (const auto& fp : fixtures::freezing_grid()) {
      const std::string label = "K=" + std::to_string(fp.K) + ",p=" + fmt(fp.p);
      const auto spec = models::freezing_urn_spec(fp);
      const Mat a = intensity_matrix(spec);
      const auto clusters = eigen_structure(a);
      std::vector<Complex> got;
      for (const auto& c : clusters)
        for (int k = 0; k < c.algebraic_multiplicity; ++k) got.push_back(c.value);
      std::vector<Complex> want{{2 * fp.p - 1, 0}};
      for (int k = 0; k <= fp.K; ++k) want.push_back({0, 0});
      for (int k = 0; k < fp.K; ++k) want.push_back({-1, 0});
      const auto by_real = [](Complex x, Complex y) { return x.real() < y.real(); };
      std::sort(got.begin(), got.end(), by_real);
      std::sort(want.begin(), want.end(), by_real);
      check.expect(got.size() == want.size(), label + ": wrong eigenvalue count");
      for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i)
        worst_eig = std::max(worst_eig, std::abs(got[i] - want[i]));
      const auto pp = principal_pair(a, spec.activities, 2 * fp.p - 1);
      const Vec closed = models::freezing_v1_closed_form(fp);
      worst_v = std::max(worst_v, (pp.v1 - closed).cwiseAbs().maxCoeff());
      worst_norm = std::max(worst_norm, std::abs(spec.activities.dot(pp.v1) - 1.0));
    }
    check.expect(worst_eig <= 1e-8, "eigenvalue error " + fmt(worst_eig));
    check.expect(worst_v <= 1e-8, "v1 error " + fmt(worst_v));
    check.expect(worst_norm <= 1e-12, "|a.v1 - 1| = " + fmt(worst_norm));
    return "9 (K,p) cases; max eigenvalue err " + fmt(worst_eig, 2) + ", v1 err " + fmt(worst_v, 2) + ", |a.v1-1| " +
           fmt(worst_norm, 2);
  }

  // ---------------------------------------------------------------- 2
  std::string projection_identities(detail::Check& check) {
    int matrices = 0;
    for (const auto& spec : fixtures::builtin_specs()) {
      const Mat a = intensity_matrix(spec);
      detail::check_projections(a, eigen_structure(a), spec.name, check);
      ++matrices;
    }
    Stream rng(opt_.seed, 2, StreamDomain::Fixture);
    for (int k = 0; k < 100; ++k) {
      const auto fx = fixtures::random_diagonalizable(6, rng, k % 2 == 1);
      detail::check_projections(fx.a, eigen_structure(fx.a), "random#" + std::to_string(k), check);
      ++matrices;
    }
    return std::to_string(matrices) + " matrices (built-ins + 100 random 6x6)";
  }

  // ---------------------------------------------------------------- 3
  std::string decomposition(detail::Check& check) {
    double worst = 0.0, polya_z = 0.0;
    int specs = 0;
    for (const auto& spec : fixtures::builtin_specs()) {
      const Urn urn(spec);
      const auto reports = audit_many(urn, intensity_matrix(spec), 200, opt_.seed, 100, {50, 100, 200}, opt_.threads);
      for (const auto& r : reports) {
        worst = std::max(worst, r.max_residual);
        if (spec.name == "polya") polya_z = std::max(polya_z, r.max_abs_z);
      }
      ++specs;
    }
    check.expect(worst <= 1e-8, "max residual " + fmt(worst));
    check.expect(polya_z == 0.0, "Polya max|Z| = " + fmt(polya_z));
    return std::to_string(specs) + " specs x 100 trajectories at n=200; max residual " + fmt(worst, 2) +
           ", Polya max|Z| = " + fmt(polya_z, 2);
  }

  // ---------------------------------------------------------------- 4
  std::string oracle_agreement(detail::Check& check) {
    const models::FreezingParams fp{1, 0.75};
    const Urn urn(models::freezing_urn_spec(fp));
    const auto ens = run_ensemble(urn, 4, {1, 2, 3, 4}, opt_.budget.reps, opt_.seed, opt_.threads);
    const auto stats = conditional_stats(ens, {2.0});
    double worst_z = 0.0;
    for (std::int64_t n = 1; n <= 4; ++n) {
      const auto oracle = enumeration_oracle(urn.spec(), n);
      const Vec exact = to_double(oracle.conditional_mean);
      const auto& cs = stats.at(n);
      for (int i = 0; i < urn.q(); ++i) {
        const double err = std::abs(cs.mean[i] - exact[i]);
        const double se = cs.mean_se[i];
        const bool ok = err <= 4.0 * opt_.budget.stat_mult * se + 1e-12;
        if (se > 0.0) worst_z = std::max(worst_z, err / se);
        check.expect(ok, "n=" + std::to_string(n) + " coord " + std::to_string(i + 1) + ": " + fmt(cs.mean[i]) +
                             " vs " + fmt(exact[i]) + " (se " + fmt(se) + ")");
      }
      // Tree-level and urn-level exact laws, state by state.
      const auto tree = models::enumerate_freezing_tree(fp, static_cast<int>(n));
      std::map<std::vector<int>, Rational> urn_law;
      for (const auto& s : oracle.states) {
        std::vector<int> key;
        for (const auto& v : s.x) key.push_back(static_cast<int>(v));
        urn_law[key] += s.prob;
      }
      check.expect(tree == urn_law, "n=" + std::to_string(n) + ": tree and urn laws differ");
    }
    const auto n2 = to_double(enumeration_oracle(urn.spec(), 2).conditional_mean);
    check.expect((n2 - Vec((Vec(4) << 1.25, 0.125, 1.25, 0.125).finished())).cwiseAbs().maxCoeff() == 0.0,
                 "oracle n=2 mean is not (1.25, 0.125, 1.25, 0.125)");
    return "reps=" + std::to_string(opt_.budget.reps) + "; max |mean - exact|/se = " + fmt(worst_z, 3) +
           "; tree == urn laws for n<=4";
  }

  // ---------------------------------------------------------------- 5
  std::string extinction(detail::Check& check) {
    const Urn urn(models::freezing_urn_spec({1, 0.75}));
    const auto ens = run_ensemble(urn, 512, {512}, opt_.budget.reps, opt_.seed, opt_.threads);
    std::int64_t alive = 0;
    for (std::int64_t r = 0; r < ens.reps; ++r) alive += ens.is_extinct(r, 0) ? 0 : 1;
    const double survival = static_cast<double>(alive) / static_cast<double>(ens.reps);
    const double tol = 0.01 * opt_.budget.stat_mult;
    check.expect(std::abs(survival - 2.0 / 3.0) <= tol, "survival " + fmt(survival, 6) + " vs 2/3");
    return "survival at n=512: " + fmt(survival, 6) + " (target 0.666667 +- " + fmt(tol, 3) + ")";
  }

  // Shared freezing(K=1, p=0.75) ensemble over n = 2^6..2^13.
  const Ensemble& big_ensemble() {
    if (!big_) {
      const auto t0 = detail::Clock::now();
      big_urn_.emplace(models::freezing_urn_spec({1, 0.75}));
      big_ = run_ensemble(*big_urn_, 8192, detail::pow2_grid(6, 13), opt_.budget.reps, opt_.seed, opt_.threads);
      big_stats_ = conditional_stats(*big_, {2.0, 4.0});
      big_seconds_ = detail::seconds_since(t0);
    }
    shared_seconds_ = big_seconds_;
    return *big_;
  }

  // ---------------------------------------------------------------- 6
  std::string mean_normalization(detail::Check& check) {
    big_ensemble();
    const models::FreezingParams fp{1, 0.75};
    const Vec v1 = models::freezing_v1_closed_form(fp);
    const auto table = mean_residual_table(*big_stats_, 2 * fp.p - 1, v1);
    const auto fit = growth_exponent_fit(table, opt_.seed);
    bool increasing = true;
    for (std::size_t i = 1; i < table.size(); ++i) increasing = increasing && table[i].value > table[i - 1].value;
    std::vector<GrowthPoint> raw = table;
    for (auto& p : raw) {
      p.value *= std::sqrt(p.n);
      p.se *= std::sqrt(p.n);
    }
    const auto raw_fit = growth_exponent_fit(raw, opt_.seed);
    check.expect(fit.slope <= 0.6, "normalized residual slope " + fmt(fit.slope));
    check.expect(!increasing, "normalized residual increases monotonically");
    std::string values;
    for (const auto& p : table) values += (values.empty() ? "" : ",") + fmt(p.value, 3);
    return "slope of |mean - n l1 v1|/sqrt(n) = " + fmt(fit.slope, 3) + " [" + fmt(fit.ci_low, 3) + ", " +
           fmt(fit.ci_high, 3) + "]; unnormalized slope " + fmt(raw_fit.slope, 3) + "; values " + values;
  }

  // ---------------------------------------------------------------- 7
  std::string growth_exponent(detail::Check& check) {
    big_ensemble();
    const auto l2 = lp_growth_table(*big_stats_, 0);
    const auto fit = growth_exponent_fit(l2, opt_.seed);
    check.expect(fit.slope >= 0.4 && fit.slope <= 0.6, "freezing L2 slope " + fmt(fit.slope));
    const auto l4_ratio = [](const EstimatorReport& r) {
      const auto& a = r.checkpoints[r.checkpoints.size() - 2];
      const auto& b = r.checkpoints.back();
      return std::abs(b.lp_norms.at(1).value / a.lp_norms.at(1).value - 1.0);
    };
    const double freezing_l4 = l4_ratio(*big_stats_);
    const double l4_tol = 0.15 * opt_.budget.stat_mult;
    check.expect(freezing_l4 <= l4_tol, "freezing L4/sqrt(n) change " + fmt(freezing_l4));

    const Urn cyc(fixtures::cyclic());
    const auto ens = run_ensemble(cyc, 8192, detail::pow2_grid(6, 13), opt_.budget.reps, opt_.seed, opt_.threads);
    const auto stats = conditional_stats(ens, {2.0, 4.0});
    const auto cyc_fit = growth_exponent_fit(lp_growth_table(stats, 0), opt_.seed);
    const double cyc_l4 = l4_ratio(stats);
    check.expect(cyc_fit.slope >= 0.4 && cyc_fit.slope <= 0.6, "cyclic L2 slope " + fmt(cyc_fit.slope));
    check.expect(cyc_l4 <= l4_tol, "cyclic L4/sqrt(n) change " + fmt(cyc_l4));
    return "L2 slope freezing " + fmt(fit.slope, 3) + " [" + fmt(fit.ci_low, 3) + ", " + fmt(fit.ci_high, 3) +
           "], cyclic " + fmt(cyc_fit.slope, 3) + "; L4/sqrt(n) change over n=4096->8192: freezing " +
           fmt(freezing_l4, 3) + ", cyclic " + fmt(cyc_l4, 3);
  }

  // ---------------------------------------------------------------- 8
  std::string clt(detail::Check& check) {
    const auto& ens = big_ensemble();
    const Vec& act = big_urn_->spec().activities;
    std::vector<int> coords;
    for (int i = 0; i < ens.q; ++i)
      if (act[i] > 0.0) coords.push_back(i);
    const auto norm = normality_diagnostics(ens, 4096, coords);
    double worst_skew = 0.0, worst_kurt = 0.0;
    for (const auto& c : norm.coordinates) {
      worst_skew = std::max(worst_skew, std::abs(c.skewness.value));
      worst_kurt = std::max(worst_kurt, std::abs(c.excess_kurtosis.value));
    }
    check.expect(worst_skew < 0.1 * opt_.budget.stat_mult, "|skewness| " + fmt(worst_skew));
    check.expect(worst_kurt < 0.2 * opt_.budget.stat_mult, "|excess kurtosis| " + fmt(worst_kurt));
    const Mat c1 = big_stats_->at(2048).cov_over_n, c2 = big_stats_->at(4096).cov_over_n;
    const double change = operator_norm(Mat(c2 - c1)) / operator_norm(c2);
    check.expect(change < 0.1 * opt_.budget.stat_mult, "Cov/n change " + fmt(change));
    return "n=4096, " + std::to_string(norm.samples) + " survivors: max|skew| " + fmt(worst_skew, 3) +
           ", max|exkurt| " + fmt(worst_kurt, 3) + "; Cov/n change 2048->4096 " + fmt(change, 3);
  }

  // ---------------------------------------------------------------- 9
  std::string hooking(detail::Check& check) {
    models::HookingParams tri{{models::triangle_block()}, 1.0, 1.0, 2};
    const auto tri_ens = models::run_hooking_ensemble(tri, 1024, {1024}, 1000, opt_.seed, opt_.threads);
    check.expect(tri_ens.min_increment == 8.0 && tri_ens.max_increment == 8.0,
                 "triangle increments in [" + fmt(tri_ens.min_increment) + ", " + fmt(tri_ens.max_increment) + "]");
    check.expect(tri_ens.max_bookkeeping_error == 0.0, "triangle bookkeeping error " + fmt(tri_ens.max_bookkeeping_error));

    models::HookingParams mixed{{models::edge_block(0.5), models::triangle_block(0.5)}, 1.0, 1.0, 3};
    const double b = models::hooking_balance_constant(mixed);
    const auto ens = models::run_hooking_ensemble(mixed, 4096, {1024, 2048, 4096}, opt_.budget.hooking_reps,
                                                  opt_.seed, opt_.threads);
    const std::size_t nck = ens.checkpoints.size(), r = ens.ks.size();
    double inc_sum = 0.0;
    Vec m2048 = Vec::Zero(static_cast<Eigen::Index>(r)), m4096 = m2048;
    for (std::int64_t t = 0; t < ens.reps; ++t) {
      const std::size_t base = static_cast<std::size_t>(t) * nck;
      inc_sum += (ens.activity[base] - mixed.rho) / 1024.0;
      for (std::size_t i = 0; i < r; ++i) {
        m2048[static_cast<Eigen::Index>(i)] += ens.census[(base + 1) * r + i];
        m4096[static_cast<Eigen::Index>(i)] += ens.census[(base + 2) * r + i];
      }
    }
    const double reps = static_cast<double>(ens.reps);
    const double mean_inc = inc_sum / reps;
    const double inc_tol = 0.05 * opt_.budget.stat_mult;
    check.expect(std::abs(mean_inc - b) <= inc_tol, "mean increment " + fmt(mean_inc, 6) + " vs b = " + fmt(b));
    check.expect(ens.min_increment == 3.0 && ens.max_increment == 8.0, "mixed increments outside {3, 8}");
    check.expect(ens.max_bookkeeping_error <= 1e-9, "mixed bookkeeping error " + fmt(ens.max_bookkeeping_error));
    double worst = 0.0;
    std::string shares;
    for (std::size_t i = 0; i < r; ++i) {
      const double a = m2048[static_cast<Eigen::Index>(i)] / reps / 2048.0;
      const double c = m4096[static_cast<Eigen::Index>(i)] / reps / 4096.0;
      worst = std::max(worst, std::abs(c - a) / c);
      shares += (shares.empty() ? "" : ",") + fmt(c / b, 3);
    }
    check.expect(worst < 0.1 * opt_.budget.stat_mult, "census/n change " + fmt(worst));
    std::string ks;
    for (int k : ens.ks) ks += (ks.empty() ? "" : ",") + std::to_string(k);
    return "triangle increment == 8 on all steps; mixed b=5.5, mean increment " + fmt(mean_inc, 6) +
           "; census/n change 2048->4096 " + fmt(worst, 3) + " over degrees {" + ks + "}, census/(n b) = " + shares;
  }

  // --------------------------------------------------------------- 10
  std::string determinism(detail::Check& check) {
    const Urn urn(models::freezing_urn_spec({1, 0.75}));
    const std::vector<std::int64_t> cks{64, 128, 256};
    const auto e1 = run_ensemble(urn, 256, cks, 4000, opt_.seed, 1);
    const auto e8 = run_ensemble(urn, 256, cks, 4000, opt_.seed, 8);
    check.expect(e1 == e8, "ensembles differ between 1 and 8 threads");
    check.expect(io::ensemble_csv(e1) == io::ensemble_csv(e8), "ensemble CSV bytes differ between 1 and 8 threads");
    models::HookingParams mixed{{models::edge_block(0.5), models::triangle_block(0.5)}, 1.0, 1.0, 3};
    const auto h1 = models::run_hooking_ensemble(mixed, 256, {256}, 500, opt_.seed, 1);
    const auto h8 = models::run_hooking_ensemble(mixed, 256, {256}, 500, opt_.seed, 8);
    check.expect(h1 == h8, "hooking ensembles differ between 1 and 8 threads");

    const auto small = run_ensemble(urn, 256, cks, 10'000, opt_.seed, opt_.threads);
    const auto large = run_ensemble(urn, 256, cks, 20'000, opt_.seed, opt_.threads);
    const auto s1 = conditional_stats(small, {2.0});
    const auto s2 = conditional_stats(large, {2.0});
    double log_sum = 0.0;
    int count = 0;
    for (std::size_t c = 0; c < cks.size(); ++c)
      for (int i = 0; i < urn.q(); ++i) {
        log_sum += std::log(s1.checkpoints[c].mean_se[i] / s2.checkpoints[c].mean_se[i]);
        ++count;
      }
    const double ratio = std::exp(log_sum / count);
    check.expect(ratio >= 1.3 && ratio <= 1.5, "SE ratio " + fmt(ratio));
    return "bit-identical ensembles for 1 vs 8 threads (urn and hooking); SE ratio for reps 1e4 -> 2e4: " +
           fmt(ratio, 4);
  }

  Options opt_;
  std::optional<Urn> big_urn_;
  std::optional<Ensemble> big_;
  std::optional<EstimatorReport> big_stats_;
  double big_seconds_ = 0.0;
  double shared_seconds_ = 0.0;
};

}  // namespace polyurn::acceptance
