// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cinttypes>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyurn/audit.hpp"
#include "polyurn/ensemble.hpp"
#include "polyurn/error.hpp"
#include "polyurn/estimators.hpp"
#include "polyurn/models/hooking.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/spectral.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "polyurn-artifact/1";

/// 17 significant digits; non-finite values become null in JSON and nan/inf
/// in CSV.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void dump(const Json& j, std::string& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(k).dump();
        out += indent < 0 ? ":" : ": ";
        dump(v, out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat || indent < 0 ? ", " : ",";
        if (!flat) newline(depth + 1);
        dump(j[i], out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Serializes with every float at 17 significant digits, newline-terminated.
inline std::string dump(const Json& j, int indent = 2) {
  std::string out;
  detail::dump(j, out, indent, 0);
  out += '\n';
  return out;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) raise(ErrorCode::IoError, "failed writing '" + path + "'");
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedSpec, what + ": " + e.what());
  }
}

inline Json to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Json to_json(const Mat& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const CMat& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    j.push_back(std::move(row));
  }
  return j;
}

// ---------------------------------------------------------------- specs

namespace detail {

template <class F>
auto guarded(const std::string& what, F f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedSpec, what + ": " + e.what());
  }
}

inline Vec vec_from(const Json& j) {
  if (!j.is_array()) throw nlohmann::json::type_error::create(302, "expected an array of numbers", &j);
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  return v;
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& what) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) raise(ErrorCode::MalformedSpec, what + ": unknown key '" + k + "'");
  }
}

}  // namespace detail

inline UrnSpec spec_from_json(const Json& j) {
  return detail::guarded("urn spec", [&] {
    if (!j.is_object()) raise(ErrorCode::MalformedSpec, "urn spec: expected an object");
    detail::reject_unknown(j, {"name", "q", "activities", "initial", "replacements"}, "urn spec");
    UrnSpec s;
    s.name = j.value("name", std::string{});
    s.q = j.at("q").get<int>();
    s.activities = detail::vec_from(j.at("activities"));
    s.initial = detail::vec_from(j.at("initial"));
    for (const auto& law : j.at("replacements")) {
      std::vector<Outcome> outcomes;
      for (const auto& o : law) {
        detail::reject_unknown(o, {"prob", "delta"}, "urn spec outcome");
        outcomes.push_back({o.at("prob").get<double>(), detail::vec_from(o.at("delta"))});
      }
      s.replacements.push_back(std::move(outcomes));
    }
    validate_spec(s);
    return s;
  });
}

inline Json to_json(const UrnSpec& s) {
  Json j;
  j["name"] = s.name;
  j["q"] = s.q;
  j["activities"] = to_json(s.activities);
  j["initial"] = to_json(s.initial);
  Json reps = Json::array();
  for (const auto& law : s.replacements) {
    Json l = Json::array();
    for (const auto& o : law) l.push_back(Json{{"prob", o.prob}, {"delta", to_json(o.delta)}});
    reps.push_back(std::move(l));
  }
  j["replacements"] = std::move(reps);
  return j;
}

inline UrnSpec load_spec(const std::string& path) { return spec_from_json(parse_json(read_text(path), path)); }

inline models::HookingParams hooking_from_json(const Json& j, int r = 3) {
  return detail::guarded("block collection", [&] {
    if (!j.is_object()) raise(ErrorCode::MalformedSpec, "block collection: expected an object");
    detail::reject_unknown(j, {"blocks", "chi", "rho", "r"}, "block collection");
    models::HookingParams p;
    p.chi = j.at("chi").get<double>();
    p.rho = j.at("rho").get<double>();
    p.r = j.value("r", r);
    for (const auto& b : j.at("blocks")) {
      detail::reject_unknown(b, {"vertices", "edges", "hook", "prob"}, "block");
      models::BlockGraph g;
      g.vertices = b.at("vertices").get<int>();
      g.hook = b.at("hook").get<int>();
      g.prob = b.at("prob").get<double>();
      for (const auto& e : b.at("edges")) {
        if (!e.is_array() || e.size() != 2) raise(ErrorCode::MalformedSpec, "block edge must be a pair");
        g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      }
      p.blocks.push_back(std::move(g));
    }
    models::check(p, false);
    return p;
  });
}

inline Json to_json(const models::HookingParams& p) {
  Json blocks = Json::array();
  for (const auto& g : p.blocks) {
    Json edges = Json::array();
    for (auto [a, b] : g.edges) edges.push_back(Json::array({a, b}));
    blocks.push_back(Json{{"vertices", g.vertices}, {"edges", edges}, {"hook", g.hook}, {"prob", g.prob}});
  }
  return Json{{"blocks", blocks}, {"chi", p.chi}, {"rho", p.rho}, {"r", p.r}};
}

inline models::HookingParams load_hooking(const std::string& path, int r = 3) {
  return hooking_from_json(parse_json(read_text(path), path), r);
}

// -------------------------------------------------------------- reports

inline Json to_json(const ValidationReport& v) {
  Json zero = Json::array();
  for (int i : v.zero_activity_types) zero.push_back(i + 1);
  return Json{{"valid", v.valid}, {"initial_activity", v.initial_activity}, {"zero_activity_types", zero},
              {"notes", v.notes}};
}

inline Json to_json(const SpectralReport& r) {
  Json clusters = Json::array();
  Json eigenvalues = Json::array();
  for (const auto& c : r.clusters) {
    for (int k = 0; k < c.algebraic_multiplicity; ++k) eigenvalues.push_back(to_json(c.value));
    clusters.push_back(Json{{"value", to_json(c.value)},
                            {"algebraic_multiplicity", c.algebraic_multiplicity},
                            {"nilpotent_index", c.nilpotent_index},
                            {"projection", to_json(c.projection)},
                            {"nilpotent_part", to_json(c.nilpotent_part)}});
  }
  Json j;
  j["intensity"] = to_json(r.intensity);
  j["activities"] = to_json(r.activities);
  j["b"] = r.b;
  j["strictly_balanced"] = r.strictly_balanced;
  j["eigenvalues"] = std::move(eigenvalues);
  j["clusters"] = std::move(clusters);
  j["classification"] = std::string(to_string(r.classification));
  j["gap"] = r.gap;
  j["lambda1"] = r.lambda1;
  j["v1"] = r.v1 ? to_json(*r.v1) : Json(nullptr);
  return j;
}

inline Json to_json(const Estimate& e) { return Json{{"value", e.value}, {"stderr", e.se}}; }

inline Json to_json(const EstimatorReport& r) {
  Json cks = Json::array();
  for (const auto& c : r.checkpoints) {
    Json lp = Json::array();
    for (std::size_t k = 0; k < c.p_list.size(); ++k)
      lp.push_back(Json{{"p", c.p_list[k]}, {"value", c.lp_norms[k].value}, {"stderr", c.lp_norms[k].se}});
    cks.push_back(Json{{"n", c.n},
                       {"survivors", c.survivors},
                       {"extinction_rate", to_json(c.extinction_rate)},
                       {"mean", to_json(c.mean)},
                       {"mean_stderr", to_json(c.mean_se)},
                       {"cov_over_n", to_json(c.cov_over_n)},
                       {"cov_over_n_stderr", to_json(c.cov_over_n_se)},
                       {"lp_norms_over_sqrt_n", lp},
                       {"skewness", to_json(c.skewness)},
                       {"skewness_stderr", to_json(c.skewness_se)},
                       {"excess_kurtosis", to_json(c.excess_kurtosis)},
                       {"excess_kurtosis_stderr", to_json(c.excess_kurtosis_se)},
                       {"centering_bias", c.centering_bias}});
  }
  return Json{{"spec", r.spec_name}, {"reps", r.reps},           {"master_seed", r.master_seed},
              {"resamples", r.resamples}, {"checkpoints", cks}};
}

inline Json to_json(const NormalityReport& r) {
  Json coords = Json::array();
  for (const auto& c : r.coordinates)
    coords.push_back(Json{{"coord", c.coord + 1},
                          {"skewness", to_json(c.skewness)},
                          {"excess_kurtosis", to_json(c.excess_kurtosis)},
                          {"ks_distance", to_json(c.ks_distance)}});
  return Json{{"n", r.n}, {"samples", r.samples}, {"pre_asymptotic", r.pre_asymptotic}, {"coordinates", coords}};
}

inline Json to_json(const GrowthFit& f) {
  return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"ci95", Json::array({f.ci_low, f.ci_high})}};
}

inline Json to_json(const AuditReport& r) {
  Json cks = Json::array();
  for (const auto& c : r.checkpoints)
    cks.push_back(Json{{"n", c.n}, {"residual", c.residual}, {"extinct", c.extinct},
                       {"activity_deviation", c.extinct ? Json(nullptr) : Json(c.activity_deviation)}});
  return Json{{"spec", r.spec_name},          {"seed", r.seed},
              {"stream_index", r.stream_index}, {"strictly_balanced", r.strictly_balanced},
              {"max_residual", r.max_residual}, {"max_abs_z", r.max_abs_z},
              {"checkpoints", cks},            {"w_partial", r.w_partial}};
}

inline Json to_json(const MartingaleReport& r) {
  Json failed = Json::array();
  for (const auto& f : r.flags)
    if (!f.pass) failed.push_back(Json{{"step", f.step}, {"coord", f.coord + 1}, {"mean", f.mean}, {"stderr", f.se}});
  return Json{{"steps", r.steps}, {"reps", r.reps}, {"checks", r.flags.size()}, {"failures", r.failures},
              {"failed", failed}};
}

inline std::string rational_string(const Rational& r) { return r.str(); }

inline Json to_json(const OracleResult& r) {
  Json states = Json::array();
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    const auto& s = r.states[i];
    Json x = Json::array(), xs = Json::array();
    for (const auto& v : s.x) {
      x.push_back(static_cast<double>(v));
      xs.push_back(rational_string(v));
    }
    states.push_back(Json{{"x", x},
                          {"x_exact", xs},
                          {"prob", static_cast<double>(s.prob)},
                          {"prob_exact", rational_string(s.prob)},
                          {"extinct", s.extinct},
                          {"conditional_prob", static_cast<double>(r.conditional_prob(i))},
                          {"conditional_prob_exact", rational_string(r.conditional_prob(i))}});
  }
  Json mean = Json::array(), mean_exact = Json::array();
  for (const auto& v : r.conditional_mean) {
    mean.push_back(static_cast<double>(v));
    mean_exact.push_back(rational_string(v));
  }
  return Json{{"n", r.n},
              {"survival", static_cast<double>(r.survival)},
              {"survival_exact", rational_string(r.survival)},
              {"conditional_mean", mean},
              {"conditional_mean_exact", mean_exact},
              {"conditional_total_activity", static_cast<double>(r.conditional_total_activity)},
              {"conditional_total_activity_exact", rational_string(r.conditional_total_activity)},
              {"states", states}};
}

/// Top-level artifact: format version, resolved config, then the payload.
inline Json envelope(const Json& config, const char* kind, Json result) {
  return Json{{"format_version", kFormatVersion}, {"kind", kind}, {"config", config}, {"result", std::move(result)}};
}

// ------------------------------------------------------------ ensembles

inline std::string ensemble_csv(const Ensemble& ens) {
  std::string out = "n,rep,extinct";
  for (int i = 1; i <= ens.q; ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (std::int64_t r = 0; r < ens.reps; ++r)
    for (std::size_t ck = 0; ck < ens.checkpoints.size(); ++ck) {
      out += std::to_string(ens.checkpoints[ck]) + ',' + std::to_string(r) + ',' + (ens.is_extinct(r, ck) ? '1' : '0');
      const auto x = ens.x(r, ck);
      for (int i = 0; i < ens.q; ++i) {
        out += ',';
        out += format_double(x[i]);
      }
      out += '\n';
    }
  return out;
}

/// Sidecar for CSV artifacts, holding what the fixed CSV header cannot.
inline Json ensemble_meta(const Ensemble& ens, const Json& config) {
  return Json{{"format_version", kFormatVersion}, {"kind", "ensemble"}, {"config", config},
              {"spec", ens.spec_name},            {"q", ens.q},         {"master_seed", ens.master_seed},
              {"reps", ens.reps},                 {"checkpoints", ens.checkpoints}};
}

inline void write_ensemble_csv(const std::string& path, const Ensemble& ens, const Json& config) {
  write_text(path, ensemble_csv(ens));
  write_text(path + ".meta.json", dump(ensemble_meta(ens, config)));
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Reads an ensemble CSV; the sidecar, when present, supplies the spec name
/// and master seed. Rows may come in any order.
inline Ensemble read_ensemble_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::IoError, "'" + path + "' is empty");
  const auto header = detail::split(line, ',');
  if (header.size() < 5 || header[0] != "n" || header[1] != "rep" || header[2] != "extinct")
    raise(ErrorCode::IoError, "'" + path + "' is not an ensemble CSV");
  Ensemble ens;
  ens.q = static_cast<int>(header.size()) - 3;
  struct Row {
    std::int64_t n, rep;
    bool extinct;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != header.size()) raise(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": wrong field count");
    try {
      Row r{std::stoll(f[0]), std::stoll(f[1]), f[2] == "1", {}};
      for (std::size_t i = 3; i < f.size(); ++i) r.x.push_back(std::stod(f[i]));
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      raise(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  std::vector<std::int64_t> cks;
  for (const auto& r : rows) {
    cks.push_back(r.n);
    ens.reps = std::max(ens.reps, r.rep + 1);
  }
  std::sort(cks.begin(), cks.end());
  cks.erase(std::unique(cks.begin(), cks.end()), cks.end());
  ens.checkpoints = cks;
  if (static_cast<std::size_t>(ens.reps) * cks.size() != rows.size())
    raise(ErrorCode::IoError, "'" + path + "' does not hold every (n, rep) pair exactly once");
  ens.values.assign(rows.size() * static_cast<std::size_t>(ens.q), 0.0);
  ens.extinct.assign(rows.size(), 0);
  std::vector<std::uint8_t> seen(rows.size(), 0);
  for (const auto& r : rows) {
    const std::size_t s = ens.slot(r.rep, ens.checkpoint_index(r.n));
    if (seen[s]++) raise(ErrorCode::IoError, "'" + path + "' repeats (n, rep)");
    ens.extinct[s] = r.extinct ? 1 : 0;
    std::copy(r.x.begin(), r.x.end(), ens.values.begin() + static_cast<std::ptrdiff_t>(s * static_cast<std::size_t>(ens.q)));
  }
  std::ifstream meta(path + ".meta.json");
  if (meta) {
    const Json m = parse_json(read_text(path + ".meta.json"), path + ".meta.json");
    ens.spec_name = m.value("spec", std::string{});
    ens.master_seed = m.value("master_seed", std::uint64_t{0});
  }
  return ens;
}

/// Compact binary with the CSV's schema: magic, q, reps, checkpoint count,
/// master seed, checkpoints, then per (rep, checkpoint) an extinct byte and q
/// little-endian doubles.
inline constexpr char kBinaryMagic[8] = {'P', 'U', 'E', 'N', 'S', '0', '0', '1'};

inline void write_ensemble_binary(const std::string& path, const Ensemble& ens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write '" + path + "'");
  auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  put(static_cast<std::int64_t>(ens.q));
  put(ens.reps);
  put(static_cast<std::int64_t>(ens.checkpoints.size()));
  put(ens.master_seed);
  for (auto n : ens.checkpoints) put(n);
  for (std::int64_t r = 0; r < ens.reps; ++r)
    for (std::size_t ck = 0; ck < ens.checkpoints.size(); ++ck) {
      put(ens.extinct[ens.slot(r, ck)]);
      const auto x = ens.x(r, ck);
      out.write(reinterpret_cast<const char*>(x.data()), static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(ens.q)));
    }
  if (!out) raise(ErrorCode::IoError, "failed writing '" + path + "'");
}

inline Ensemble read_ensemble_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open '" + path + "'");
  auto get = [&](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) raise(ErrorCode::IoError, "'" + path + "' is truncated");
  };
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kBinaryMagic)) raise(ErrorCode::IoError, "'" + path + "' is not an ensemble binary");
  Ensemble ens;
  std::int64_t q = 0, nck = 0;
  get(q);
  get(ens.reps);
  get(nck);
  get(ens.master_seed);
  if (q < 1 || ens.reps < 0 || nck < 0) raise(ErrorCode::IoError, "'" + path + "' has a bad header");
  ens.q = static_cast<int>(q);
  ens.checkpoints.resize(static_cast<std::size_t>(nck));
  for (auto& n : ens.checkpoints) get(n);
  const std::size_t slots = static_cast<std::size_t>(ens.reps) * static_cast<std::size_t>(nck);
  ens.extinct.resize(slots);
  ens.values.resize(slots * static_cast<std::size_t>(q));
  for (std::size_t s = 0; s < slots; ++s) {
    get(ens.extinct[s]);
    in.read(reinterpret_cast<char*>(ens.values.data() + s * static_cast<std::size_t>(q)),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(q)));
    if (!in) raise(ErrorCode::IoError, "'" + path + "' is truncated");
  }
  return ens;
}

// ---------------------------------------------------------------- stats

/// Long-format statistics table with header n,stat,coord,value,stderr.
/// Coordinates are 1-based; matrices use "i:j"; scalars use 0.
inline std::string stats_csv(const EstimatorReport& r) {
  std::string out = "n,stat,coord,value,stderr\n";
  auto row = [&](std::int64_t n, const std::string& stat, const std::string& coord, double v, double se) {
    out += std::to_string(n) + ',' + stat + ',' + coord + ',' + format_double(v) + ',' + format_double(se) + '\n';
  };
  for (const auto& c : r.checkpoints) {
    row(c.n, "survivors", "0", static_cast<double>(c.survivors), 0.0);
    row(c.n, "extinction_rate", "0", c.extinction_rate.value, c.extinction_rate.se);
    for (Eigen::Index i = 0; i < c.mean.size(); ++i) row(c.n, "mean", std::to_string(i + 1), c.mean[i], c.mean_se[i]);
    for (Eigen::Index i = 0; i < c.cov_over_n.rows(); ++i)
      for (Eigen::Index j = 0; j < c.cov_over_n.cols(); ++j)
        row(c.n, "cov_over_n", std::to_string(i + 1) + ':' + std::to_string(j + 1), c.cov_over_n(i, j),
            c.cov_over_n_se(i, j));
    for (std::size_t k = 0; k < c.p_list.size(); ++k)
      row(c.n, "lp_over_sqrt_n", format_double(c.p_list[k]), c.lp_norms[k].value, c.lp_norms[k].se);
    for (Eigen::Index i = 0; i < c.skewness.size(); ++i) {
      row(c.n, "skewness", std::to_string(i + 1), c.skewness[i], c.skewness_se[i]);
      row(c.n, "excess_kurtosis", std::to_string(i + 1), c.excess_kurtosis[i], c.excess_kurtosis_se[i]);
    }
    row(c.n, "centering_bias", "0", c.centering_bias, 0.0);
  }
  return out;
}

}  // namespace polyurn::io
