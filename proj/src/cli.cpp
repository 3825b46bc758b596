#include "curio/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "curio/experiment.hpp"
#include "curio/oracles.hpp"
#include "curio/parallel.hpp"

namespace curio {

namespace fs = std::filesystem;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  auto number = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("--seeds: '" + s + "' is not a non-negative integer");
    return std::stoull(s);
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string tok = text.substr(start, comma - start);
    const std::size_t dash = tok.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(number(tok));
    } else {
      const auto a = number(tok.substr(0, dash)), b = number(tok.substr(dash + 1));
      if (b < a) throw ConfigError("--seeds: empty range '" + tok + "'");
      for (auto s = a; s <= b; ++s) seeds.push_back(s);
    }
    start = comma + 1;
  }
  if (seeds.empty()) throw ConfigError("--seeds: no seeds given");
  return seeds;
}

namespace {

struct CommonOptions {
  std::string seeds;
  std::string out;
  int parallelism = 0;
  std::optional<double> gamma;
  std::optional<double> k_weight;
  std::string planner = "cem";
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_planner) {
  cmd->add_option("--seeds", o.seeds, "Seed list, e.g. 0,1,2 or 0-4");
  cmd->add_option("--out", o.out, "Output directory (default $CURIO_OUT_DIR, then ./results)");
  cmd->add_option("--parallelism", o.parallelism, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
  cmd->add_option("--gamma", o.gamma, "Soft-DTW smoothing")->check(CLI::NonNegativeNumber);
  cmd->add_option("--k-weight", o.k_weight, "Weight of the clustering score in the reward");
  if (with_planner) cmd->add_option("--planner", o.planner, "cem or ppo")->check(CLI::IsMember({"cem", "ppo"}));
}

std::string out_dir(const CommonOptions& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("CURIO_OUT_DIR"); env && *env) return env;
  return "results";
}

int threads(const CommonOptions& o) {
  if (o.parallelism > 0) return o.parallelism;
  return std::max(1u, std::thread::hardware_concurrency());
}

void apply_overrides(ExperimentConfig& cfg, const CommonOptions& o, bool planner_flag) {
  if (!o.seeds.empty()) cfg.seeds = parse_seed_list(o.seeds);
  if (o.gamma) cfg.metric.gamma = *o.gamma;
  if (o.k_weight) cfg.metric.k = *o.k_weight;
  if (planner_flag) cfg.planner = *parse_planner(o.planner);
  cfg.validate();
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_result(std::ostream& out, const ReplicationResult& r) {
  int failed = 0;
  for (const auto& s : r.seeds) failed += s.ok ? 0 : 1;
  out << r.label << "  [" << r.fingerprint << "]  F1 " << fixed(r.holdout_f1.mean, 2) << " +/- "
      << fixed(r.holdout_f1.std, 2) << "  silhouette " << fixed(r.holdout_silhouette.mean) << " +/- "
      << fixed(r.holdout_silhouette.std) << "  (train F1 " << fixed(r.train_f1.mean, 2) << ", silhouette "
      << fixed(r.train_silhouette.mean) << ")";
  if (failed) out << "  " << failed << " seed(s) failed";
  out << "\n";
}

bool all_ok(const std::vector<ReplicationResult>& rs) {
  for (const auto& r : rs)
    for (const auto& s : r.seeds)
      if (!s.ok) return false;
  return true;
}

int run_suite(const std::string& which, const CommonOptions& o, std::ostream& out) {
  ExperimentConfig base;
  apply_overrides(base, o, true);
  const Executor executor(threads(o));
  ResultCache cache;
  const std::string dir = (fs::path(out_dir(o)) / (which + "_" + o.planner)).string();
  RunOptions opts{&executor, &cache, dir};

  std::vector<ReplicationResult> results;
  if (which == "rq1") {
    results = run_full_range_suite(base, opts);
  } else if (which == "rq2") {
    for (Factor f : kAllFactors) {
      auto r = run_bipartition_suite(f, kMaxBipartitionDepth, base, opts);
      results.insert(results.end(), r.begin(), r.end());
    }
  } else if (which == "rq3") {
    for (Factor f : kAllFactors) {
      auto r = run_gap_suite(f, base, opts);
      results.insert(results.end(), r.begin(), r.end());
    }
  } else if (which == "rq4") {
    const TwoFactorGrid grid = run_two_factor_grid(base, opts);
    write_grid_tables(grid, dir);
    for (const auto& row : grid.cells)
      for (const auto& cell : row)
        if (cell) results.push_back(*cell);
    for (const auto& [p, q] : grid.skipped)
      out << "skipped " << factor_key(p) << "/" << factor_key(q) << " (excluded pair)\n";
  } else if (which == "rq5") {
    results = run_anm_suite(base, opts, false);
    for (auto& r : run_anm_suite(base, opts, true)) results.push_back(std::move(r));
  } else {
    throw ConfigError("suite: unknown protocol '" + which + "' (expected rq1..rq5)");
  }
  write_suite_table(results, (fs::path(dir) / "table.csv").string());
  for (const auto& r : results) print_result(out, r);
  out << "wrote " << dir << "\n";
  return all_ok(results) ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curiosity-driven causal factor experiments"};
  app.require_subcommand(1);

  CommonOptions run_opts, suite_opts;
  std::string config_path, suite_name, report_dir;

  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config_path, "Scenario config (JSON)")->required();
  add_common(run, run_opts, false);
  std::string run_planner;
  run->add_option("--planner", run_planner, "Override the config's planner")->check(CLI::IsMember({"cem", "ppo"}));

  auto* suite = app.add_subcommand("suite", "Run a research-question protocol with default settings");
  suite->add_option("protocol", suite_name, "rq1 | rq2 | rq3 | rq4 | rq5")->required();
  add_common(suite, suite_opts, true);

  auto* validate = app.add_subcommand("validate", "Run the oracle fixture suite");
  auto* report = app.add_subcommand("report", "Regenerate tables from a results directory");
  report->add_option("dir", report_dir, "Results directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (!run_planner.empty()) {
        run_opts.planner = run_planner;
        apply_overrides(cfg, run_opts, true);
      } else {
        apply_overrides(cfg, run_opts, false);
      }
      const Executor executor(threads(run_opts));
      RunOptions opts{&executor, nullptr, out_dir(run_opts)};
      const ReplicationResult r = run_experiment(cfg, opts);
      print_result(out, r);
      out << "wrote " << (fs::path(*opts.out_dir) / r.fingerprint).string() << "\n";
      return all_ok({r}) ? kExitOk : kExitFailure;
    }
    if (*suite) return run_suite(suite_name, suite_opts, out);
    if (*validate) {
      bool ok = true;
      for (const OracleCheck& c : run_oracle_suite()) {
        out << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << " (tolerance " << c.tolerance
            << ", " << fixed(c.seconds, 2) << " s)\n";
        ok = ok && c.passed;
      }
      return ok ? kExitOk : kExitFailure;
    }
    if (*report) {
      const std::size_t n = regenerate_reports(report_dir);
      out << "regenerated " << n << " result(s) under " << report_dir << "\n";
      return n > 0 ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace curio
