#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curio/experiment.hpp"
#include "curio/parallel.hpp"

using namespace curio;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "name": "tiny",
  "primary_factor": "lateral_friction",
  "n_envs": 4,
  "holdout_envs": 4,
  "seeds": [0, 1],
  "sim": {"frames": 24},
  "cem": {"iterations": 2, "plans_per_iter": 2}
})";

ExperimentConfig tiny() { return parse_config(kTiny); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("curio_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("flat config form") {
  const ExperimentConfig c = parse_config(R"({"primary_factor": "mass", "ranges": [[0.5, 0.4], [0.01, 0.1]],
                                              "n_envs": 8, "seed": 3})");
  CHECK(c.scenario.kind == ScenarioKind::Explicit);
  CHECK(c.scenario.primary == Factor::Mass);
  REQUIRE(c.scenario.ranges);
  // normalised min-first, lower range first
  CHECK(c.scenario.ranges->low.low == 0.01);
  CHECK(c.scenario.ranges->low.high == 0.1);
  CHECK(c.scenario.ranges->high.low == 0.4);
  CHECK(c.scenario.ranges->high.high == 0.5);
  CHECK(c.n_envs == 8);
  CHECK(c.seeds == std::vector<std::uint64_t>{3});
}

TEST_CASE("scenario kinds are inferred") {
  CHECK(parse_config(R"({"primary_factor": "size"})").scenario.kind == ScenarioKind::FullRange);
  CHECK(parse_config(R"({"primary_factor": "size", "path": "LLR"})").scenario.kind == ScenarioKind::Bipartition);
  CHECK(parse_config(R"({"primary_factor": "size", "halvings": 2})").scenario.kind == ScenarioKind::Gap);
  CHECK(parse_config(R"({"primary_factor": "size", "secondary_factor": "mass"})").scenario.kind ==
        ScenarioKind::TwoFactor);
  const ExperimentConfig anm = parse_config(R"({"anm_scenario": "C6"})");
  CHECK(anm.scenario.kind == ScenarioKind::Anm);
  CHECK(anm.scenario.primary == Factor::SpinningFriction);
  const ExperimentConfig nested = parse_config(R"({"scenario": {"kind": "gap", "primary_factor": "gravity",
                                                   "halvings": 4}, "planner": "ppo", "seeds": [9]})");
  CHECK(nested.scenario.kind == ScenarioKind::Gap);
  CHECK(nested.planner == PlannerKind::Ppo);
  CHECK(parse_config(R"({"seed": 5, "n_seeds": 3})").seeds == std::vector<std::uint64_t>{5, 6, 7});
}

TEST_CASE("config errors name the field") {
  CHECK(error_of(R"({"primary_factor": "mass", "colour": 1})").find("colour") != std::string::npos);
  CHECK(error_of(R"({"cem": {"iterations": "many"}})").find("cem.iterations") != std::string::npos);
  CHECK(error_of(R"({"primary_factor": "density"})").find("primary_factor") != std::string::npos);
  CHECK(error_of(R"({"primary_factor": "mass", "ranges": [[0.0, 0.1], [0.2, 0.3]]})").find("ranges") !=
        std::string::npos);
  CHECK(error_of(R"({"n_envs": 7})").find("n_envs") != std::string::npos);
  CHECK(error_of(R"({"holdout_envs": 3})").find("holdout_envs") != std::string::npos);
  CHECK(error_of(R"({"primary_factor": "mass", "secondary_factor": "gravity"})").find("excluded") !=
        std::string::npos);
  CHECK(error_of(R"({"halvings": 5})").find("halvings") != std::string::npos);
  const std::string syntax = error_of("{\n  \"n_envs\": 4,\n  \"seeds\": [1,, 2]\n}");
  CHECK(syntax.find("line 3") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("canonical form round-trips and fingerprints are stable") {
  const ExperimentConfig c = tiny();
  const ExperimentConfig back = parse_config(canonical_json(c));
  CHECK(canonical_json(back) == canonical_json(c));
  CHECK(fingerprint(back) == fingerprint(c));
  CHECK(fingerprint(c).size() == 16);
  ExperimentConfig d = c;
  d.metric.gamma = 0.2;
  CHECK(fingerprint(d) != fingerprint(c));
}

TEST_CASE("resolved ranges come from the schedule operations") {
  for (Factor f : kAllFactors) {
    ScenarioSpec s;
    s.primary = f;
    CHECK(resolve(s).ranges == thirds_partition(global_range(f)));
    s.kind = ScenarioKind::Gap;
    s.halvings = 3;
    CHECK(resolve(s).ranges == gap_schedule(global_range(f), 3));
    s.kind = ScenarioKind::Bipartition;
    s.side_path = parse_side_path("LRLRLR");
    CHECK(resolve(s).ranges == bipartition_descend(global_range(f), s.side_path));
  }
}

TEST_CASE("training and holdout batches never share samples") {
  ScenarioSpec s;
  s.primary = Factor::Size;
  const ResolvedScenario r = resolve(s);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto train = r.make_batch(20, training_seed(seed));
    const auto hold = r.make_batch(20, holdout_seed(seed));
    for (const auto& a : train.specs)
      for (const auto& b : hold.specs) CHECK(a.size() != b.size());
  }
}

TEST_CASE("aggregates") {
  const Aggregate a = aggregate({1.0, 2.0, 3.0, 4.0});
  CHECK(a.mean == 2.5);
  CHECK(a.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(a.n == 4);
  CHECK(aggregate({7.0}).std == 0.0);
}

TEST_CASE("tiny experiment end to end") {
  const ExperimentConfig cfg = tiny();
  const fs::path dir = scratch("e2e");
  const Executor one(1), three(3);
  const ReplicationResult a = run_experiment(cfg, RunOptions{&one, nullptr, dir.string()});
  REQUIRE(a.seeds.size() == 2);
  for (const auto& s : a.seeds) {
    CHECK(s.ok);
    CHECK(s.holdout_f1 >= 0.0);
    CHECK(s.holdout_f1 <= 1.0);
    CHECK(s.evaluations == 4);
    CHECK(s.best_plan.controls.size() == 12);
  }
  // aggregates recompute from the per-seed rows
  ReplicationResult copy = a;
  copy.recompute_aggregates();
  CHECK(std::abs(copy.holdout_f1.mean - a.holdout_f1.mean) < 1e-12);
  const fs::path out = dir / a.fingerprint;
  const std::string details = slurp(out / "details.csv");
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "trace.log"));
  // header + 2 seed rows + mean + std
  CHECK(std::count(details.begin(), details.end(), '\n') == 5);

  // identical bytes at another parallelism degree
  const fs::path dir3 = scratch("e2e3");
  const ReplicationResult b = run_experiment(cfg, RunOptions{&three, nullptr, dir3.string()});
  CHECK(b.fingerprint == a.fingerprint);
  CHECK(slurp(dir3 / b.fingerprint / "details.csv") == details);

  // summaries read back into the same table
  const ReplicationResult back = read_summary((out / "summary.json").string());
  CHECK(details_csv(back) == details);
  CHECK(regenerate_reports(dir.string()) == 1);
  CHECK(slurp(out / "details.csv") == details);
  CHECK(fs::exists(dir / "table.csv"));
  fs::remove_all(dir);
  fs::remove_all(dir3);
}

TEST_CASE("the result cache shares identical jobs") {
  ExperimentConfig cfg = tiny();
  cfg.seeds = {0};
  ResultCache cache;
  RunOptions opts{nullptr, &cache, std::nullopt};
  ExperimentConfig full = cfg, gap0 = cfg;
  full.scenario.kind = ScenarioKind::FullRange;
  gap0.scenario.kind = ScenarioKind::Gap;
  gap0.scenario.halvings = 0;
  const auto a = run_experiment(full, opts);
  CHECK(cache.size() == 1);
  const auto b = run_experiment(gap0, opts);
  CHECK(cache.size() == 1);
  CHECK(a.seeds[0].best_plan == b.seeds[0].best_plan);
  CHECK(a.seeds[0].holdout_f1 == b.seeds[0].holdout_f1);
}

TEST_CASE("bipartition suite uses the published side for gravity") {
  ExperimentConfig cfg = tiny();
  cfg.seeds = {0};
  cfg.cem.iterations = 1;
  cfg.cem.plans_per_iter = 1;
  ResultCache cache;
  const auto r = run_bipartition_suite(Factor::Gravity, 2, cfg, RunOptions{nullptr, &cache, std::nullopt});
  REQUIRE(r.size() == 3);
  // L holds the values nearest -1
  CHECK(r[1].resolved.ranges.high.high == -1.0);
  CHECK(r[2].resolved.ranges.low.low == -11.5);
  const auto d0 = run_bipartition_suite(Factor::Mass, 0, cfg, RunOptions{nullptr, &cache, std::nullopt});
  REQUIRE(d0.size() == 3);
  CHECK(d0[1].fingerprint == d0[0].fingerprint);
  CHECK(d0[2].seeds[0].holdout_f1 == d0[0].seeds[0].holdout_f1);
}

TEST_CASE("two-factor grid skips the excluded pair") {
  ExperimentConfig cfg = tiny();
  cfg.seeds = {0};
  cfg.cem.iterations = 1;
  cfg.cem.plans_per_iter = 1;
  const fs::path dir = scratch("grid");
  const TwoFactorGrid g = run_two_factor_grid(cfg, RunOptions{nullptr, nullptr, std::nullopt});
  int cells = 0;
  for (Factor p : kAllFactors)
    for (Factor q : kAllFactors) {
      const bool present = g.cells[index_of(p)][index_of(q)].has_value();
      cells += present;
      CHECK(present == (p != q && !is_excluded_pair(p, q)));
    }
  CHECK(cells == 18);
  CHECK(g.skipped.size() == 2);
  write_grid_tables(g, dir.string());
  const std::string f1 = slurp(dir / "f1_matrix.csv");
  CHECK(std::count(f1.begin(), f1.end(), '\n') == 6);
  CHECK(f1.find("excluded") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("shipped example configs parse") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(CURIO_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config(e.path().string()));
    ++n;
  }
  CHECK(n >= 5);
}
