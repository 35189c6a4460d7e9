// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polyurn/acceptance.hpp"
#include "polyurn/audit.hpp"
#include "polyurn/ensemble.hpp"
#include "polyurn/estimators.hpp"
#include "polyurn/io.hpp"
#include "polyurn/models/freezing.hpp"
#include "polyurn/models/hooking.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/spectral.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::cli {

using io::Json;

/// Fully resolved invocation. Defaults here are part of the CLI contract.
struct RunConfig {
  std::string command;
  /// model: freezing | hooking.
  std::string model;
  /// Spec JSON (analyze, simulate, audit, oracle), block collection JSON
  /// (model hooking) or ensemble file (estimate).
  std::string input;
  std::string output;
  std::string stats_output;
  std::string format = "csv";
  std::int64_t n = 4096;
  std::string checkpoints = "pow2";
  std::int64_t reps = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::vector<double> p_list{2.0, 4.0};
  double cluster_tol = 1e-8;
  double rank_tol = 1e-8;
  double proj_tol = 1e-6;
  std::int64_t count = 1;
  std::int64_t martingale_reps = 0;
  int K = 1;
  double p = 0.75;
  int r = 3;
  std::string suite = "core";
  std::string budget = "desk";
  std::vector<int> only;
  std::int64_t node_budget = static_cast<std::int64_t>(kDefaultNodeBudget);
  /// Config keys set by a flag or the config file rather than by default.
  std::set<std::string> given;
  /// Set when --help was requested; holds the help text.
  std::string help;

  SpectralTolerances tolerances() const { return {cluster_tol, rank_tol, proj_tol}; }
};

/// Expands "pow2" to 2^6..2^floor(log2 n) together with n, or parses a comma
/// list. The result is sorted and deduplicated.
inline std::vector<std::int64_t> resolve_checkpoints(const std::string& text, std::int64_t n) {
  std::vector<std::int64_t> out;
  if (text == "pow2") {
    for (std::int64_t k = 64; k <= n; k *= 2) out.push_back(k);
    out.push_back(n);
  } else if (text == "final") {
    out.push_back(n);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stoll(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        raise(ErrorCode::UsageError, "bad checkpoint '" + item + "' (expected pow2, final or a comma list)");
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (auto c : out)
    if (c < 0 || c > n) raise(ErrorCode::UsageError, "checkpoint " + std::to_string(c) + " outside [0, n]");
  return out;
}

/// Resolved config as embedded in artifacts. The thread budget is omitted:
/// results do not depend on it.
inline Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  if (c.command == "model") j["model"] = c.model;
  j["input"] = c.input;
  j["output"] = c.output;
  if (c.command == "estimate") j["stats_output"] = c.stats_output;
  if (c.command == "simulate") j["format"] = c.format;
  j["n"] = c.n;
  j["checkpoints"] = c.checkpoints;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["p_list"] = c.p_list;
  j["cluster_tol"] = c.cluster_tol;
  j["rank_tol"] = c.rank_tol;
  j["proj_tol"] = c.proj_tol;
  if (c.command == "audit") {
    j["count"] = c.count;
    j["martingale_reps"] = c.martingale_reps;
  }
  if (c.command == "model") {
    j["K"] = c.K;
    j["p"] = c.p;
    j["r"] = c.r;
  }
  if (c.command == "oracle") j["node_budget"] = c.node_budget;
  if (c.command == "verify") {
    j["suite"] = c.suite;
    j["budget"] = c.budget;
    j["only"] = c.only;
  }
  return j;
}

namespace detail {

// One overridable setting: its config-file key and how to copy it.
struct Setting {
  const char* key;
  std::function<void(RunConfig&, const Json&)> from_json;
  std::function<void(RunConfig&, const RunConfig&)> from_flags;
  const char* flag;
};

template <class T>
Setting setting(const char* key, const char* flag, T RunConfig::*field) {
  return {key, [field](RunConfig& c, const Json& j) { c.*field = j.get<T>(); },
          [field](RunConfig& c, const RunConfig& f) { c.*field = f.*field; }, flag};
}

inline const std::vector<Setting>& settings() {
  static const std::vector<Setting> table{
      setting("output", "--output", &RunConfig::output),
      setting("stats_output", "--stats", &RunConfig::stats_output),
      setting("format", "--format", &RunConfig::format),
      setting("n", "--n", &RunConfig::n),
      setting("checkpoints", "--checkpoints", &RunConfig::checkpoints),
      setting("reps", "--reps", &RunConfig::reps),
      setting("seed", "--seed", &RunConfig::seed),
      setting("threads", "--threads", &RunConfig::threads),
      setting("p_list", "--p", &RunConfig::p_list),
      setting("cluster_tol", "--cluster-tol", &RunConfig::cluster_tol),
      setting("rank_tol", "--rank-tol", &RunConfig::rank_tol),
      setting("proj_tol", "--proj-tol", &RunConfig::proj_tol),
      setting("count", "--count", &RunConfig::count),
      setting("martingale_reps", "--martingale-reps", &RunConfig::martingale_reps),
      setting("K", "--K", &RunConfig::K),
      setting("p", "--p", &RunConfig::p),
      setting("r", "--r", &RunConfig::r),
      setting("suite", "--suite", &RunConfig::suite),
      setting("budget", "--budget", &RunConfig::budget),
      setting("only", "--only", &RunConfig::only),
      setting("node_budget", "--node-budget", &RunConfig::node_budget),
  };
  return table;
}

}  // namespace detail

/// Parses argv (and an optional --config JSON file). Explicit flags override
/// config-file values, which override defaults. Unknown config keys are
/// rejected. Throws Error(UsageError) on any problem.
inline RunConfig parse_config(int argc, const char* const* argv) {
  RunConfig flags;
  std::string config_path;
  CLI::App app{"Generalized Polya urn toolkit", "polyurn"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.add_option("--config", config_path, "JSON file of settings; flags take precedence");

  auto common_sim = [&](CLI::App* sub) {
    sub->add_option("--n", flags.n, "Number of steps")->check(CLI::NonNegativeNumber);
    sub->add_option("--checkpoints", flags.checkpoints, "pow2 | final | comma list");
    sub->add_option("--reps", flags.reps, "Number of trajectories")->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--threads", flags.threads, "Thread budget (default $POLYURN_THREADS or all cores)");
  };
  auto tol_opts = [&](CLI::App* sub) {
    sub->add_option("--cluster-tol", flags.cluster_tol, "Relative eigenvalue clustering tolerance");
    sub->add_option("--rank-tol", flags.rank_tol, "Relative rank tolerance for nilpotent parts");
    sub->add_option("--proj-tol", flags.proj_tol, "Per-dimension projection tolerance");
  };

  auto* analyze = app.add_subcommand("analyze", "Spectral report of an urn spec");
  analyze->add_option("spec", flags.input, "Urn spec JSON")->required()->check(CLI::ExistingFile);
  analyze->add_option("-o,--output", flags.output, "Output path (default stdout)");
  tol_opts(analyze);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble of an urn");
  simulate->add_option("spec", flags.input, "Urn spec JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("-o,--output", flags.output, "Ensemble output path");
  simulate->add_option("--format", flags.format, "csv | binary")->check(CLI::IsMember({"csv", "binary"}));
  common_sim(simulate);

  auto* estimate = app.add_subcommand("estimate", "Conditional estimators from an ensemble");
  estimate->add_option("ensemble", flags.input, "Ensemble CSV or binary")->required()->check(CLI::ExistingFile);
  estimate->add_option("-o,--output", flags.output, "EstimatorReport JSON path (default stdout)");
  estimate->add_option("--stats", flags.stats_output, "Stats CSV path (default <output>.stats.csv)");
  estimate->add_option("--p", flags.p_list, "L^p orders, comma separated")->delimiter(',');
  estimate->add_option("--seed", flags.seed, "Resampling seed (default: the ensemble's master seed)");

  auto* audit = app.add_subcommand("audit", "Decomposition audit of audited trajectories");
  audit->add_option("spec", flags.input, "Urn spec JSON")->required()->check(CLI::ExistingFile);
  audit->add_option("-o,--output", flags.output, "Output path (default stdout)");
  audit->add_option("--count", flags.count, "Audited trajectories")->check(CLI::PositiveNumber);
  audit->add_option("--martingale-reps", flags.martingale_reps, "Trajectories for the martingale check (0: skip)");
  common_sim(audit);

  auto* oracle = app.add_subcommand("oracle", "Exact law of X_n by enumeration");
  oracle->add_option("spec", flags.input, "Urn spec JSON")->required()->check(CLI::ExistingFile);
  oracle->add_option("-o,--output", flags.output, "Output path (default stdout)");
  oracle->add_option("--n", flags.n, "Number of steps")->check(CLI::NonNegativeNumber);
  oracle->add_option("--node-budget", flags.node_budget, "Maximum expanded nodes per step");

  auto* model = app.add_subcommand("model", "Built-in models: freezing spec or hooking simulation");
  model->add_option("kind", flags.model, "freezing | hooking")->required()->check(CLI::IsMember({"freezing", "hooking"}));
  model->add_option("blocks", flags.input, "Block collection JSON (hooking)")->check(CLI::ExistingFile);
  model->add_option("-o,--output", flags.output, "Output path (default stdout)");
  model->add_option("--K", flags.K, "Freezing degree cutoff");
  model->add_option("--p", flags.p, "Freezing growth probability");
  model->add_option("--r", flags.r, "Tracked essential degrees (hooking)");
  common_sim(model);

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--suite", flags.suite, "Suite name")->check(CLI::IsMember({"core"}));
  verify->add_option("--budget", flags.budget, "desk | ci")->check(CLI::IsMember({"desk", "ci"}));
  verify->add_option("--only", flags.only, "Criterion ids, comma separated")->delimiter(',');
  verify->add_option("--seed", flags.seed, "Master seed");
  verify->add_option("--threads", flags.threads, "Thread budget");
  verify->add_option("-o,--output", flags.output, "Results JSON path");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    RunConfig c;
    c.help = app.help();
    return c;
  } catch (const CLI::CallForAllHelp&) {
    RunConfig c;
    c.help = app.help("", CLI::AppFormatMode::All);
    return c;
  } catch (const CLI::ParseError& e) {
    raise(ErrorCode::UsageError, e.what());
  }

  CLI::App* sub = app.get_subcommands().front();
  RunConfig cfg;
  cfg.command = sub->get_name();
  cfg.model = flags.model;
  cfg.input = flags.input;
  if (cfg.command == "verify") cfg.seed = acceptance::Options{}.seed;
  if (cfg.command == "model" && cfg.model == "hooking") cfg.n = 1024;
  if (cfg.command == "oracle") cfg.n = 4;

  if (!config_path.empty()) {
    const Json j = io::parse_json(io::read_text(config_path), config_path);
    if (!j.is_object()) raise(ErrorCode::UsageError, config_path + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      const auto& table = detail::settings();
      const auto it = std::find_if(table.begin(), table.end(), [&](const detail::Setting& s) { return key == s.key; });
      if (it == table.end()) raise(ErrorCode::UsageError, config_path + ": unknown key '" + key + "'");
      cfg.given.insert(key);
      try {
        it->from_json(cfg, value);
      } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::UsageError, config_path + ": bad value for '" + key + "': " + e.what());
      }
    }
  }
  for (const auto& s : detail::settings()) {
    // --p means p_list for estimate and the freezing parameter for model.
    if (std::string(s.flag) == "--p" && (std::string(s.key) == "p_list") != (cfg.command == "estimate")) continue;
    if (sub->get_option_no_throw(s.flag) && sub->count(s.flag) > 0) {
      s.from_flags(cfg, flags);
      cfg.given.insert(s.key);
    }
  }
  if (cfg.threads == 0) cfg.threads = default_thread_budget();

  if (cfg.command == "simulate" && cfg.output.empty()) raise(ErrorCode::UsageError, "simulate needs --output");
  if (cfg.command == "model" && cfg.model == "hooking" && cfg.input.empty())
    raise(ErrorCode::UsageError, "model hooking needs a block collection file");
  if (cfg.command == "estimate")
    for (double p : cfg.p_list)
      if (!(p >= 2.0)) raise(ErrorCode::UsageError, "--p values must be >= 2");
  if (cfg.reps < 1) raise(ErrorCode::UsageError, "--reps must be positive");
  if (cfg.n < 0) raise(ErrorCode::UsageError, "--n must be non-negative");
  return cfg;
}

inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::UsageError:
    case ErrorCode::IoError: return 1;
    case ErrorCode::IllConditioned:
    case ErrorCode::ResidualTooLarge: return 3;
    default: return 2;
  }
}

namespace detail {

inline void emit(const RunConfig& cfg, const Json& artifact, std::ostream& out) {
  if (cfg.output.empty())
    out << io::dump(artifact);
  else
    io::write_text(cfg.output, io::dump(artifact));
}

inline Json fit_or_reason(const std::vector<GrowthPoint>& pts, std::uint64_t seed) {
  try {
    return io::to_json(growth_exponent_fit(pts, seed));
  } catch (const Error& e) {
    return Json{{"error", std::string(to_string(e.code()))}, {"message", e.message()}};
  }
}

}  // namespace detail

/// Runs a resolved config. Returns the process exit status; module errors
/// propagate as Error.
inline int execute(const RunConfig& cfg, std::ostream& out = std::cout) {
  const Json config = to_json(cfg);
  if (cfg.command == "analyze") {
    const UrnSpec spec = io::load_spec(cfg.input);
    const auto validation = validate_spec(spec);
    const auto report = analyze(spec, cfg.tolerances());
    Json result = io::to_json(report);
    result["validation"] = io::to_json(validation);
    detail::emit(cfg, io::envelope(config, "spectral_report", std::move(result)), out);
    return 0;
  }
  if (cfg.command == "simulate") {
    const Urn urn(io::load_spec(cfg.input));
    const auto cks = resolve_checkpoints(cfg.checkpoints, cfg.n);
    const auto ens = run_ensemble(urn, cfg.n, cks, cfg.reps, cfg.seed, cfg.threads);
    if (cfg.format == "binary") {
      io::write_ensemble_binary(cfg.output, ens);
      io::write_text(cfg.output + ".meta.json", io::dump(io::ensemble_meta(ens, config)));
    } else {
      io::write_ensemble_csv(cfg.output, ens, config);
    }
    return 0;
  }
  if (cfg.command == "estimate") {
    std::ifstream probe(cfg.input, std::ios::binary);
    char magic[8] = {};
    probe.read(magic, 8);
    Ensemble ens = std::equal(magic, magic + 8, io::kBinaryMagic) ? io::read_ensemble_binary(cfg.input)
                                                                   : io::read_ensemble_csv(cfg.input);
    if (std::filesystem::exists(cfg.input + ".meta.json")) {
      const Json meta = io::parse_json(io::read_text(cfg.input + ".meta.json"), cfg.input + ".meta.json");
      ens.spec_name = meta.value("spec", ens.spec_name);
      ens.master_seed = meta.value("master_seed", ens.master_seed);
    }
    // The resampling seed defaults to the ensemble's master seed.
    Json resolved = config;
    if (cfg.given.count("seed")) ens.master_seed = cfg.seed;
    resolved["seed"] = ens.master_seed;
    const auto report = conditional_stats(ens, cfg.p_list);
    Json result = io::to_json(report);
    Json fits = Json::object();
    for (std::size_t k = 0; k < cfg.p_list.size(); ++k)
      fits["L" + io::format_double(cfg.p_list[k])] = detail::fit_or_reason(lp_growth_table(report, k, 1), ens.master_seed);
    result["growth_fits"] = fits;
    const std::int64_t last = ens.checkpoints.back();
    try {
      result["normality"] = io::to_json(normality_diagnostics(ens, last));
    } catch (const Error& e) {
      result["normality"] = Json{{"error", std::string(to_string(e.code()))}, {"message", e.message()}};
    }
    detail::emit(cfg, io::envelope(resolved, "estimator_report", std::move(result)), out);
    std::string stats_path = cfg.stats_output;
    if (stats_path.empty() && !cfg.output.empty()) {
      std::filesystem::path p(cfg.output);
      stats_path = (p.parent_path() / p.stem()).string() + ".stats.csv";
    }
    if (!stats_path.empty()) {
      io::write_text(stats_path, io::stats_csv(report));
      Json meta{{"format_version", io::kFormatVersion}, {"kind", "stats"}, {"config", resolved}};
      io::write_text(stats_path + ".meta.json", io::dump(meta));
    }
    return 0;
  }
  if (cfg.command == "audit") {
    const UrnSpec spec = io::load_spec(cfg.input);
    const Urn urn(spec);
    const auto cks = resolve_checkpoints(cfg.checkpoints, cfg.n);
    const auto reports = audit_many(urn, intensity_matrix(spec), cfg.n, cfg.seed, cfg.count, cks, cfg.threads);
    Json list = Json::array();
    double worst = 0.0, max_z = 0.0;
    for (const auto& r : reports) {
      list.push_back(io::to_json(r));
      worst = std::max(worst, r.max_residual);
      max_z = std::max(max_z, r.max_abs_z);
    }
    Json result{{"max_residual", worst}, {"max_abs_z", max_z}, {"trajectories", list}};
    if (cfg.martingale_reps > 0)
      result["martingale"] = io::to_json(martingale_check(urn, cfg.n, cfg.martingale_reps, cfg.seed, cfg.threads));
    detail::emit(cfg, io::envelope(config, "audit_report", std::move(result)), out);
    return 0;
  }
  if (cfg.command == "oracle") {
    const auto result = enumeration_oracle(io::load_spec(cfg.input), cfg.n, static_cast<std::size_t>(cfg.node_budget));
    detail::emit(cfg, io::envelope(config, "oracle", io::to_json(result)), out);
    return 0;
  }
  if (cfg.command == "model" && cfg.model == "freezing") {
    // The bare spec, so the output feeds straight into the other commands.
    const auto spec = models::freezing_urn_spec({cfg.K, cfg.p});
    detail::emit(cfg, io::to_json(spec), out);
    return 0;
  }
  if (cfg.command == "model" && cfg.model == "hooking") {
    auto p = io::load_hooking(cfg.input, cfg.r);
    if (cfg.given.count("r")) p.r = cfg.r;
    const auto cks = resolve_checkpoints(cfg.checkpoints, cfg.n);
    const auto ens = models::run_hooking_ensemble(p, cfg.n, cks, cfg.reps, cfg.seed, cfg.threads);
    const double b = models::hooking_balance_constant(p);
    const std::size_t nck = cks.size(), r = ens.ks.size();
    Json rows = Json::array();
    for (std::size_t c = 0; c < nck; ++c) {
      Vec mean = Vec::Zero(static_cast<Eigen::Index>(r));
      double act = 0.0;
      for (std::int64_t t = 0; t < ens.reps; ++t) {
        const std::size_t slot = static_cast<std::size_t>(t) * nck + c;
        act += ens.activity[slot];
        for (std::size_t i = 0; i < r; ++i) mean[static_cast<Eigen::Index>(i)] += ens.census[slot * r + i];
      }
      mean /= static_cast<double>(ens.reps);
      act /= static_cast<double>(ens.reps);
      const double n = static_cast<double>(cks[c]);
      rows.push_back(Json{{"n", cks[c]},
                          {"mean_census", io::to_json(mean)},
                          {"mean_census_over_nb", n > 0 ? io::to_json(Vec(mean / (n * b))) : Json(nullptr)},
                          {"mean_activity", act},
                          {"mean_increment", n > 0 ? Json((act - p.rho) / n) : Json(nullptr)}});
    }
    Json result{{"params", io::to_json(p)},
                {"essential_degrees", ens.ks},
                {"b", b},
                {"checkpoints", rows},
                {"min_increment", ens.min_increment},
                {"max_increment", ens.max_increment},
                {"max_bookkeeping_error", ens.max_bookkeeping_error}};
    detail::emit(cfg, io::envelope(config, "hooking_summary", std::move(result)), out);
    return 0;
  }
  if (cfg.command == "verify") {
    acceptance::Options opt;
    opt.budget = acceptance::Budget::parse(cfg.budget);
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.only.insert(cfg.only.begin(), cfg.only.end());
    acceptance::Suite suite(opt);
    const auto results = suite.run([&](const acceptance::CriterionResult& r) { out << acceptance::Suite::format(r) << std::endl; });
    bool all = true;
    Json list = Json::array();
    for (const auto& r : results) {
      all = all && r.pass;
      list.push_back(Json{{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds},
                          {"limit_seconds", r.limit_seconds}});
    }
    out << (all ? "all criteria passed" : "some criteria FAILED") << std::endl;
    if (!cfg.output.empty()) io::write_text(cfg.output, io::dump(io::envelope(config, "acceptance", list)));
    return all ? 0 : 4;
  }
  raise(ErrorCode::UsageError, "unknown command '" + cfg.command + "'");
}

/// Machine-readable error record written to stderr.
inline std::string error_json(const Error& e) {
  return io::dump(Json{{"error", std::string(to_string(e.code()))}, {"message", e.message()}, {"exit_code", exit_code(e.code())}}, -1);
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const RunConfig cfg = parse_config(argc, argv);
    if (!cfg.help.empty()) {
      out << cfg.help;
      return 0;
    }
    return execute(cfg, out);
  } catch (const Error& e) {
    err << error_json(e);
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << error_json(Error(ErrorCode::IoError, e.what()));
    return 1;
  }
}

}  // namespace polyurn::cli
