// Acceptance run: one PASS/FAIL line per criterion. The experiment criteria use the
// default settings (20 environments, 5 plans, 100 CEM iterations, 5 seeds) and take
// roughly an hour and a half on one core.
//
// CURIO_ACCEPTANCE_ONLY=1,2,11 restricts the run to the listed criteria.
// Suite results land in $CURIO_OUT_DIR (default ./acceptance_results).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "curio/experiment.hpp"
#include "curio/oracles.hpp"
#include "curio/parallel.hpp"

using namespace curio;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string f(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> holdout_f1(const ReplicationResult& r) {
  std::vector<double> out;
  for (const auto& s : r.seeds) out.push_back(s.ok ? s.holdout_f1 : 0.0);
  return out;
}

std::vector<double> holdout_sil(const ReplicationResult& r) {
  std::vector<double> out;
  for (const auto& s : r.seeds) out.push_back(s.ok ? s.holdout_silhouette : 0.0);
  return out;
}

int count_at_least(const std::vector<double>& v, double t) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [t](double x) { return x >= t; }));
}

std::string seeds_f1(const ReplicationResult& r) {
  std::string s;
  for (double v : holdout_f1(r)) s += (s.empty() ? "" : " ") + f("%.2f", v);
  return s;
}

struct Context {
  Executor executor{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  ResultCache cache;
  ExperimentConfig base;
  std::string out_dir;

  RunOptions opts(const std::string& sub) { return {&executor, &cache, (fs::path(out_dir) / sub).string()}; }
};

struct Outcome {
  bool passed;
  std::string detail;
};

Outcome oracle(const OracleCheck& c, double max_seconds = 0.0) {
  bool ok = c.passed;
  std::string detail = c.detail + ", " + f("%.2f s", c.seconds);
  if (max_seconds > 0.0 && c.seconds >= max_seconds) {
    ok = false;
    detail += " (over the " + f("%.0f s", max_seconds) + " budget)";
  }
  return {ok, detail};
}

// ---- experiment criteria

Outcome rq1(Context& ctx) {
  bool ok = true;
  std::string detail;
  std::vector<ReplicationResult> all;
  for (Factor fac : kAllFactors) {
    ExperimentConfig cfg = ctx.base;
    cfg.scenario.kind = ScenarioKind::FullRange;
    cfg.scenario.primary = fac;
    const auto t0 = Clock::now();
    const ReplicationResult r = run_experiment(cfg, ctx.opts("rq1"));
    const double secs = since(t0);
    const int perfect = count_at_least(holdout_f1(r), 1.0);
    const bool good = perfect >= 4 && r.holdout_silhouette.mean >= 0.6 && secs < 600.0;
    ok = ok && good;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(factor_key(fac)) + " F1=1 in " +
              std::to_string(perfect) + "/5, sil " + f("%.3f", r.holdout_silhouette.mean) + ", " +
              f("%.0f s", secs) + (good ? "" : " [miss]");
    all.push_back(r);
  }
  write_suite_table(all, (fs::path(ctx.out_dir) / "rq1" / "table.csv").string());
  return {ok, detail};
}

Outcome rq2(Context& ctx) {
  const auto r = run_bipartition_suite(Factor::Mass, kMaxBipartitionDepth, ctx.base, ctx.opts("rq2"));
  write_suite_table(r, (fs::path(ctx.out_dir) / "rq2" / "table.csv").string());
  const double m0 = median(holdout_sil(r[0]));
  bool ok = true;
  std::string detail = "depth 0 median sil " + f("%.3f", m0);
  const char* names[] = {"", "L", "R"};
  for (int side = 1; side <= 2; ++side) {
    const int perfect = count_at_least(holdout_f1(r[side]), 1.0);
    const double m6 = median(holdout_sil(r[side]));
    const bool good = perfect >= 4 && m6 >= m0;
    ok = ok && good;
    detail += std::string("; Mass ") + names[side] + " F1=1 in " + std::to_string(perfect) + "/5, median sil " +
              f("%.3f", m6) + (good ? "" : " [miss]");
  }
  return {ok, detail};
}

Outcome rq3(Context& ctx) {
  bool ok = true;
  std::string detail;
  std::vector<ReplicationResult> all;
  for (Factor fac : kAllFactors) {
    ExperimentConfig c0 = ctx.base, c4 = ctx.base;
    c0.scenario.primary = c4.scenario.primary = fac;
    c0.scenario.kind = c4.scenario.kind = ScenarioKind::Gap;
    c4.scenario.halvings = kMaxGapHalvings;
    const ReplicationResult r0 = run_experiment(c0, ctx.opts("rq3"));
    const ReplicationResult r4 = run_experiment(c4, ctx.opts("rq3"));
    const double m0 = median(holdout_sil(r0)), m4 = median(holdout_sil(r4));
    const int good_f1 = count_at_least(holdout_f1(r4), 0.9);
    const double drop = m0 > 0.0 ? 1.0 - m4 / m0 : 0.0;
    const bool good = m4 <= 0.9 * m0 && 2 * good_f1 > static_cast<int>(r4.seeds.size());
    ok = ok && good;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(factor_key(fac)) + " median sil " +
              f("%.3f", m0) + " -> " + f("%.3f", m4) + " (drop " + f("%.1f%%", 100.0 * drop) + "), F1>=0.9 in " +
              std::to_string(good_f1) + "/5" + (good ? "" : " [miss]");
    all.push_back(r0);
    all.push_back(r4);
  }
  write_suite_table(all, (fs::path(ctx.out_dir) / "rq3" / "table.csv").string());
  return {ok, detail};
}

Outcome rq4(Context& ctx) {
  std::vector<ReplicationResult> all;
  auto row_mean = [&](Factor primary) {
    double sum = 0.0;
    int n = 0;
    for (Factor sec : kAllFactors) {
      if (sec == primary || is_excluded_pair(primary, sec)) continue;
      ExperimentConfig cfg = ctx.base;
      cfg.scenario.kind = ScenarioKind::TwoFactor;
      cfg.scenario.primary = primary;
      cfg.scenario.secondary = sec;
      const ReplicationResult r = run_experiment(cfg, ctx.opts("rq4"));
      sum += r.holdout_f1.mean;
      ++n;
      all.push_back(r);
    }
    return sum / n;
  };
  const double size = row_mean(Factor::Size);
  const double spin = row_mean(Factor::SpinningFriction);
  write_suite_table(all, (fs::path(ctx.out_dir) / "rq4" / "table.csv").string());
  std::string detail = "Size-primary mean F1 " + f("%.3f", size) + " vs Spinning-Friction-primary " + f("%.3f", spin);
  for (const auto& r : all) detail += "; " + r.label + " " + f("%.2f", r.holdout_f1.mean);
  return {size > spin, detail};
}

Outcome rq5(Context& ctx) {
  bool ok = true;
  std::string detail;
  std::vector<ReplicationResult> all;
  for (AnmScenarioId id : {AnmScenarioId::C1, AnmScenarioId::C3}) {
    for (bool zero : {true, false}) {
      ExperimentConfig cfg = ctx.base;
      cfg.scenario.kind = ScenarioKind::Anm;
      cfg.scenario.anm = id;
      cfg.scenario.anm_zero_noise = zero;
      cfg.scenario.primary = anm_scenario(id).cluster_target.front();
      const ReplicationResult r = run_experiment(cfg, ctx.opts("rq5"));
      const auto f1 = holdout_f1(r);
      const bool good = zero ? count_at_least(f1, 1.0) == static_cast<int>(f1.size()) : median(f1) >= 0.8;
      ok = ok && good;
      detail += std::string(detail.empty() ? "" : "; ") + r.label + " F1 [" + seeds_f1(r) + "]" + (good ? "" : " [miss]");
      all.push_back(r);
    }
  }
  write_suite_table(all, (fs::path(ctx.out_dir) / "rq5" / "table.csv").string());
  return {ok, detail};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(Context& ctx) {
  ExperimentConfig cfg = ctx.base;
  cfg.scenario.primary = Factor::SpinningFriction;
  cfg.cem.iterations = 10;
  cfg.seeds = {0, 1, 2};
  std::string reference;
  std::string detail;
  bool ok = true;
  int run = 0;
  for (int degree : {1, 1, 2, 4}) {
    const Executor ex(degree);
    const fs::path dir = fs::path(ctx.out_dir) / "determinism" / ("run" + std::to_string(run++));
    fs::remove_all(dir);
    const ReplicationResult r = run_experiment(cfg, RunOptions{&ex, nullptr, dir.string()});
    const std::string bytes = read_bytes(dir / r.fingerprint / "details.csv");
    if (reference.empty()) {
      reference = bytes;
      detail = std::to_string(bytes.size()) + "-byte details.csv";
    } else if (bytes != reference) {
      ok = false;
      detail += "; differs at parallelism " + std::to_string(degree);
    }
  }
  detail += ok ? "; identical across 2 repeats at parallelism 1 and at 2 and 4" : "";
  return {ok, detail};
}

}  // namespace

int main() {
  std::set<int> only;
  if (const char* env = std::getenv("CURIO_ACCEPTANCE_ONLY"); env && *env) {
    std::stringstream ss(env);
    std::string tok;
    while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
  }
  Context ctx;
  const char* out = std::getenv("CURIO_OUT_DIR");
  ctx.out_dir = out && *out ? out : "acceptance_results";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Soft-DTW oracle", [] { return oracle(check_soft_dtw(0, 200), 10.0); }},
      {"Silhouette oracle", [] { return oracle(check_silhouette(0, 25)); }},
      {"Physics oracle", [] { return oracle(check_stopping_distance()); }},
      {"CEM sanity", [] { return oracle(check_cem_quadratic(0), 5.0); }},
      {"PPO gradient", [] { return oracle(check_ppo_gradient(0)); }},
      {"RQ1 trend", [&] { return rq1(ctx); }},
      {"RQ2 trend", [&] { return rq2(ctx); }},
      {"RQ3 trend", [&] { return rq3(ctx); }},
      {"RQ4 qualitative", [&] { return rq4(ctx); }},
      {"RQ5 sanity", [&] { return rq5(ctx); }},
      {"Determinism", [&] { return determinism(ctx); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::printf("%s  [%d] %s: %s (%.0f s)\n", o.passed ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
