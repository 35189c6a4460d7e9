// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyurn/error.hpp"
#include "polyurn/urn.hpp"

namespace polyurn {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct SpectralTolerances {
  /// Relative eigenvalue clustering radius (scaled by 1 + ||A||).
  double cluster_tol = 1e-8;
  /// Relative threshold on singular values of powers of N (scaled by
  /// max(||A||, 1)^power).
  double rank_tol = 1e-8;
  /// Per-dimension bound on ||sum P - I||.
  double proj_tol_per_q = 1e-6;
};

/// Operator 2-norm.
inline double operator_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

inline double operator_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMat>(m).singularValues()(0);
}

/// Intensity matrix A with A(i, j) = a_j E[xi_{j,i}].
inline Mat intensity_matrix(const UrnSpec& spec) {
  validate_spec(spec);
  Mat a = mean_replacement(spec);
  for (int j = 0; j < spec.q; ++j) a.col(j) *= spec.activities[j];
  return a;
}

/// One cluster of numerically coincident eigenvalues together with its
/// spectral projection P and nilpotent part N = (A - lambda I) P.
struct EigenCluster {
  Complex value;
  int algebraic_multiplicity = 0;
  /// Largest Jordan block size minus one.
  int nilpotent_index = 0;
  CMat projection;
  CMat nilpotent_part;
};

namespace detail {

inline double cluster_radius(int multiplicity, double norm_a, const SpectralTolerances& tol) {
  const double flat = tol.cluster_tol * (1.0 + norm_a);
  const double defective = std::pow(1e4 * DBL_EPSILON * (1.0 + norm_a), 1.0 / multiplicity);
  return std::max(flat, defective);
}

struct RawCluster {
  std::vector<Complex> members;
  Complex centroid() const {
    Complex c{0.0, 0.0};
    for (auto z : members) c += z;
    return c / static_cast<double>(members.size());
  }
  double radius() const {
    const Complex c = centroid();
    double r = 0.0;
    for (auto z : members) r = std::max(r, std::abs(z - c));
    return r;
  }
};

// Candidate clusters are the k nearest eigenvalues around each eigenvalue,
// accepted when their spread fits the admissible radius for size k. Larger
// candidates are taken first; overlapping candidates are skipped.
inline std::vector<RawCluster> agglomerate(const CVec& eigenvalues, double norm_a, const SpectralTolerances& tol) {
  const auto q = static_cast<std::size_t>(eigenvalues.size());
  struct Candidate {
    std::vector<std::size_t> idx;
    double ratio;
  };
  std::vector<Candidate> candidates;
  std::vector<std::size_t> order(q);
  for (std::size_t seed = 0; seed < q; ++seed) {
    for (std::size_t i = 0; i < q; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      const double dx = std::abs(eigenvalues[static_cast<Eigen::Index>(x)] - eigenvalues[static_cast<Eigen::Index>(seed)]);
      const double dy = std::abs(eigenvalues[static_cast<Eigen::Index>(y)] - eigenvalues[static_cast<Eigen::Index>(seed)]);
      return dx != dy ? dx < dy : x < y;
    });
    RawCluster group;
    for (std::size_t k = 0; k < q; ++k) {
      group.members.push_back(eigenvalues[static_cast<Eigen::Index>(order[k])]);
      if (k == 0) continue;
      const double ratio = group.radius() / cluster_radius(static_cast<int>(k + 1), norm_a, tol);
      if (ratio <= 1.0) candidates.push_back({std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1)), ratio});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return x.idx.size() != y.idx.size() ? x.idx.size() > y.idx.size() : x.ratio < y.ratio;
  });
  std::vector<bool> taken(q, false);
  std::vector<RawCluster> groups;
  for (const auto& c : candidates) {
    bool free = true;
    for (auto i : c.idx) free = free && !taken[i];
    if (!free) continue;
    RawCluster g;
    for (auto i : c.idx) {
      taken[i] = true;
      g.members.push_back(eigenvalues[static_cast<Eigen::Index>(i)]);
    }
    groups.push_back(std::move(g));
  }
  for (std::size_t i = 0; i < q; ++i)
    if (!taken[i]) groups.push_back({{eigenvalues[static_cast<Eigen::Index>(i)]}});
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const int m = static_cast<int>(groups[i].members.size() + groups[j].members.size());
      const double d = std::abs(groups[i].centroid() - groups[j].centroid());
      if (d < 10.0 * cluster_radius(m, norm_a, tol)) {
        raise(ErrorCode::IllConditioned, "eigenvalue clusters at distance " + std::to_string(d) +
                                             " cannot be separated at the clustering tolerance");
      }
    }
  }
  return groups;
}

// Truncated power-series product (coefficients in t up to order - 1).
inline std::vector<Complex> series_mul(const std::vector<Complex>& f, const std::vector<Complex>& g, std::size_t order) {
  std::vector<Complex> out(order, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < std::min(order, f.size()); ++i)
    for (std::size_t j = 0; i + j < order && j < g.size(); ++j) out[i + j] += f[i] * g[j];
  return out;
}

}  // namespace detail

/// Spectral projections by Hermite interpolation: P_lambda = p(A) where p is
/// 1 to order m_lambda at lambda and vanishes to order m_mu at every other
/// cluster value mu. Writes projection and nilpotent_part of each cluster.
/// Throws IllConditioned if the projections fail to resolve the identity.
inline void spectral_projections(const Mat& a, std::vector<EigenCluster>& clusters,
                                 const SpectralTolerances& tol = {}) {
  const auto q = a.rows();
  const CMat ac = a.cast<Complex>();
  const CMat eye = CMat::Identity(q, q);
  for (auto& target : clusters) {
    const auto order = static_cast<std::size_t>(target.algebraic_multiplicity);
    // g(z) = prod_{mu != lambda} ((z - mu) / (lambda - mu))^{m_mu}, expanded
    // at z = lambda + t; h = 1/g truncated, so p = h g.
    std::vector<Complex> g_series{Complex{1.0, 0.0}};
    CMat g_mat = eye;
    for (const auto& other : clusters) {
      if (&other == &target) continue;
      const Complex diff = target.value - other.value;
      const std::vector<Complex> factor{Complex{1.0, 0.0}, Complex{1.0, 0.0} / diff};
      const CMat factor_mat = (ac - other.value * eye) / diff;
      for (int k = 0; k < other.algebraic_multiplicity; ++k) {
        g_series = detail::series_mul(g_series, factor, order);
        g_mat = g_mat * factor_mat;
      }
    }
    g_series.resize(order, Complex{0.0, 0.0});
    std::vector<Complex> h(order);
    h[0] = Complex{1.0, 0.0} / g_series[0];
    for (std::size_t k = 1; k < order; ++k) {
      Complex acc{0.0, 0.0};
      for (std::size_t j = 1; j <= k; ++j) acc += g_series[j] * h[k - j];
      h[k] = -acc / g_series[0];
    }
    const CMat shifted = ac - target.value * eye;
    CMat h_mat = CMat::Zero(q, q);
    CMat power = eye;
    for (std::size_t k = 0; k < order; ++k) {
      h_mat += h[k] * power;
      power = power * shifted;
    }
    target.projection = h_mat * g_mat;
    target.nilpotent_part = shifted * target.projection;
  }

  const double proj_tol = tol.proj_tol_per_q * static_cast<double>(q);
  CMat sum = CMat::Zero(q, q);
  for (const auto& c : clusters) sum += c.projection;
  const double resid = operator_norm(CMat(sum - eye));
  if (resid > proj_tol)
    raise(ErrorCode::IllConditioned, "||sum P - I|| = " + std::to_string(resid) + " exceeds " + std::to_string(proj_tol));

  // Conjugate clusters of a real matrix are validated jointly.
  for (const auto& c : clusters) {
    if (c.value.imag() == 0.0) continue;
    const EigenCluster* partner = nullptr;
    for (const auto& d : clusters)
      if (&d != &c && std::abs(d.value - std::conj(c.value)) <= 1e-6 * (1.0 + std::abs(c.value))) partner = &d;
    if (!partner) raise(ErrorCode::IllConditioned, "complex cluster without a conjugate partner");
    const double imag = operator_norm(Mat((c.projection + partner->projection).imag()));
    if (imag > proj_tol) raise(ErrorCode::IllConditioned, "conjugate projections do not sum to a real matrix");
  }
}

/// Clusters the spectrum, computes projections and nilpotent indices, and
/// sorts by decreasing real part, then decreasing nilpotent index, then
/// decreasing imaginary part.
inline std::vector<EigenCluster> eigen_structure(const Mat& a, const SpectralTolerances& tol = {}) {
  if (a.rows() != a.cols() || a.rows() == 0) raise(ErrorCode::InvalidParams, "intensity matrix must be square");
  if (a.rows() > 64) raise(ErrorCode::InvalidParams, "eigen_structure targets q <= 64");
  const double norm_a = operator_norm(a);
  Eigen::EigenSolver<Mat> solver(a, false);
  if (solver.info() != Eigen::Success) raise(ErrorCode::IllConditioned, "eigenvalue iteration did not converge");
  const auto groups = detail::agglomerate(solver.eigenvalues(), norm_a, tol);

  std::vector<EigenCluster> clusters;
  const double snap = tol.cluster_tol * (1.0 + norm_a);
  for (const auto& g : groups) {
    EigenCluster c;
    c.value = g.centroid();
    if (std::abs(c.value.imag()) <= snap) c.value.imag(0.0);
    c.algebraic_multiplicity = static_cast<int>(g.members.size());
    clusters.push_back(std::move(c));
  }
  spectral_projections(a, clusters, tol);

  const double scale = std::max(norm_a, 1.0);
  for (auto& c : clusters) {
    CMat power = c.nilpotent_part;
    int nu = -1;
    for (int j = 1; j <= c.algebraic_multiplicity; ++j) {
      const double threshold = tol.rank_tol * std::pow(scale, j);
      Eigen::JacobiSVD<CMat> svd(power);
      const auto rank = (svd.singularValues().array() > threshold).count();
      if (rank == 0) {
        nu = j - 1;
        break;
      }
      power = power * c.nilpotent_part;
    }
    if (nu < 0) raise(ErrorCode::IllConditioned, "nilpotent part does not vanish at the algebraic multiplicity");
    c.nilpotent_index = nu;
  }

  std::sort(clusters.begin(), clusters.end(),
            [](const EigenCluster& x, const EigenCluster& y) { return x.value.real() > y.value.real(); });
  // Reorder runs with numerically equal real parts.
  for (std::size_t start = 0; start < clusters.size();) {
    std::size_t end = start + 1;
    while (end < clusters.size() && std::abs(clusters[end].value.real() - clusters[start].value.real()) <= snap) ++end;
    std::sort(clusters.begin() + static_cast<std::ptrdiff_t>(start), clusters.begin() + static_cast<std::ptrdiff_t>(end),
              [](const EigenCluster& x, const EigenCluster& y) {
                if (x.nilpotent_index != y.nilpotent_index) return x.nilpotent_index > y.nilpotent_index;
                return x.value.imag() > y.value.imag();
              });
    start = end;
  }
  return clusters;
}

enum class Classification { StrictlySmall, SmallCritical, Large, DominantNotSimple };

constexpr std::string_view to_string(Classification c) noexcept {
  switch (c) {
    case Classification::StrictlySmall: return "StrictlySmall";
    case Classification::SmallCritical: return "SmallCritical";
    case Classification::Large: return "Large";
    case Classification::DominantNotSimple: return "DominantNotSimple";
  }
  return "Unknown";
}

struct ClassifyResult {
  Classification classification = Classification::StrictlySmall;
  /// lambda1 - 2 Re lambda2, with eigenvalues counted by multiplicity.
  double gap = 0.0;
  /// Index of the cluster at b in the sorted cluster list.
  std::size_t dominant = 0;
};

/// Classifies a sorted cluster list against the balance constant b.
inline ClassifyResult classify(const std::vector<EigenCluster>& clusters, double b, double tol) {
  std::optional<std::size_t> at_b;
  for (std::size_t i = 0; i < clusters.size(); ++i)
    if (std::abs(clusters[i].value - Complex{b, 0.0}) <= tol) at_b = i;
  if (!at_b) raise(ErrorCode::DominantMismatch, "no eigenvalue of A matches b = " + std::to_string(b));
  for (const auto& c : clusters)
    if (c.value.real() > b + tol)
      raise(ErrorCode::DominantMismatch, "eigenvalue with real part " + std::to_string(c.value.real()) + " exceeds b");

  ClassifyResult out;
  out.dominant = *at_b;
  const auto& dom = clusters[*at_b];
  double re2 = 0.0;
  if (dom.algebraic_multiplicity > 1) {
    re2 = dom.value.real();
  } else {
    bool have = false;
    for (std::size_t i = 0; i < clusters.size() && !have; ++i) {
      if (i == *at_b) continue;
      re2 = clusters[i].value.real();
      have = true;
    }
  }
  out.gap = b - 2.0 * re2;
  if (dom.algebraic_multiplicity > 1)
    out.classification = Classification::DominantNotSimple;
  else if (std::abs(out.gap) <= tol)
    out.classification = Classification::SmallCritical;
  else if (out.gap > 0.0)
    out.classification = Classification::StrictlySmall;
  else
    out.classification = Classification::Large;
  return out;
}

struct PrincipalPair {
  double lambda1 = 0.0;
  Vec v1;
};

/// Right eigenvector of A for b normalized by a.v1 = 1. Throws NotSimple when
/// b is a multiple eigenvalue.
inline PrincipalPair principal_pair(const Mat& a, const Vec& activities, double b,
                                    const std::vector<EigenCluster>& clusters, double tol) {
  for (const auto& c : clusters) {
    if (std::abs(c.value - Complex{b, 0.0}) <= tol && c.algebraic_multiplicity > 1)
      raise(ErrorCode::NotSimple, "eigenvalue b = " + std::to_string(b) + " has multiplicity " +
                                      std::to_string(c.algebraic_multiplicity));
  }
  const auto q = a.rows();
  Mat system(q + 1, q);
  system.topRows(q) = a - b * Mat::Identity(q, q);
  system.row(q) = activities.transpose();
  Vec rhs = Vec::Zero(q + 1);
  rhs[q] = 1.0;
  Vec v = system.colPivHouseholderQr().solve(rhs);
  // One step of iterative refinement, then exact renormalization.
  v += system.colPivHouseholderQr().solve(rhs - system * v);
  v /= activities.dot(v);
  return {b, v};
}

inline PrincipalPair principal_pair(const Mat& a, const Vec& activities, double b, const SpectralTolerances& tol = {}) {
  const auto clusters = eigen_structure(a, tol);
  return principal_pair(a, activities, b, clusters, tol.cluster_tol * (1.0 + operator_norm(a)) * 10.0);
}

/// omega_k = s0 + k b for k = 0..n.
inline std::vector<double> omega_sequence(double s0, double b, std::int64_t n) {
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  for (std::int64_t k = 0; k <= n; ++k) w[static_cast<std::size_t>(k)] = s0 + static_cast<double>(k) * b;
  return w;
}

/// F_{i,j} = prod_{i <= k < j} (I + A / omega_k), multiplied left to right.
inline Mat transition_product(const Mat& a, std::span<const double> omega, std::int64_t i, std::int64_t j) {
  if (i < 0 || j < i) raise(ErrorCode::InvalidParams, "transition_product needs 0 <= i <= j");
  if (static_cast<std::size_t>(j) > omega.size()) raise(ErrorCode::InvalidParams, "omega sequence too short");
  const auto q = a.rows();
  Mat f = Mat::Identity(q, q);
  for (std::int64_t k = i; k < j; ++k) f = f * (Mat::Identity(q, q) + a / omega[static_cast<std::size_t>(k)]);
  return f;
}

/// All F_{l,n} for l = 0..n, built from the right by F_{l,n} = (I + A/omega_l) F_{l+1,n}.
inline std::vector<Mat> transition_products_to(const Mat& a, std::span<const double> omega, std::int64_t n) {
  if (static_cast<std::size_t>(n) > omega.size()) raise(ErrorCode::InvalidParams, "omega sequence too short");
  const auto q = a.rows();
  std::vector<Mat> f(static_cast<std::size_t>(n + 1));
  f[static_cast<std::size_t>(n)] = Mat::Identity(q, q);
  for (std::int64_t l = n - 1; l >= 0; --l)
    f[static_cast<std::size_t>(l)] =
        (Mat::Identity(q, q) + a / omega[static_cast<std::size_t>(l)]) * f[static_cast<std::size_t>(l + 1)];
  return f;
}

struct SpectralReport {
  Mat intensity;
  Vec activities;
  double b = 0.0;
  bool strictly_balanced = false;
  std::vector<EigenCluster> clusters;
  Classification classification = Classification::StrictlySmall;
  double gap = 0.0;
  double lambda1 = 0.0;
  /// Absent when b is not a simple eigenvalue.
  std::optional<Vec> v1;
};

/// Full spectral analysis of an urn balanced in expectation.
inline SpectralReport analyze(const UrnSpec& spec, const SpectralTolerances& tol = {}) {
  const BalanceInfo balance = balance_constant(spec);
  SpectralReport r;
  r.intensity = intensity_matrix(spec);
  r.activities = spec.activities;
  r.b = balance.b;
  r.strictly_balanced = balance.strictly_balanced;
  r.clusters = eigen_structure(r.intensity, tol);
  const double match_tol = 10.0 * tol.cluster_tol * (1.0 + operator_norm(r.intensity));
  const auto cls = classify(r.clusters, r.b, match_tol);
  r.classification = cls.classification;
  r.gap = cls.gap;
  r.lambda1 = r.b;
  if (r.classification != Classification::DominantNotSimple)
    r.v1 = principal_pair(r.intensity, spec.activities, r.b, r.clusters, match_tol).v1;
  return r;
}

}  // namespace polyurn
