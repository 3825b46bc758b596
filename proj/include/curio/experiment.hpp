#pragma once

// Experiment configs, the per-seed train/holdout protocol, the five suite protocols and
// result persistence.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "curio/factors.hpp"
#include "curio/metrics.hpp"
#include "curio/planners.hpp"
#include "curio/sim.hpp"

namespace curio {

class Executor;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlannerKind : std::uint8_t { Cem, Ppo };
std::string_view planner_key(PlannerKind p);
std::optional<PlannerKind> parse_planner(std::string_view key);

enum class ScenarioKind : std::uint8_t { FullRange, Bipartition, Gap, TwoFactor, Anm, Explicit };
std::string_view scenario_key(ScenarioKind k);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::FullRange;
  Factor primary = Factor::Mass;
  std::optional<Factor> secondary;
  std::vector<Side> side_path;
  int halvings = 0;
  AnmScenarioId anm = AnmScenarioId::C1;
  bool anm_zero_noise = false;
  // explicit ranges: primary for Explicit, optional overrides for TwoFactor
  std::optional<RangePair> ranges;
  std::optional<RangePair> secondary_ranges;
};

struct ExperimentConfig {
  std::string name;
  ScenarioSpec scenario;
  PlannerKind planner = PlannerKind::Cem;
  CemConfig cem;
  PpoConfig ppo;
  SimConfig sim;
  MetricConfig metric;
  int n_envs = 20;
  int holdout_envs = 20;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  /// Throws ConfigError.
  void validate() const;
};

/// Reads the scenario file format. Unknown keys are rejected; errors name the field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON (sorted keys, every field explicit).
std::string canonical_json(const ExperimentConfig& cfg);
/// 16 hex digits of FNV-1a over the canonical JSON.
std::string fingerprint(const ExperimentConfig& cfg);
std::string scenario_label(const ScenarioSpec& s);

struct ResolvedScenario {
  Factor primary = Factor::Mass;
  RangePair ranges;
  std::optional<Factor> secondary;
  std::optional<RangePair> secondary_ranges;
  std::optional<AnmScenario> anm;

  EnvironmentBatch make_batch(int n_envs, std::uint64_t seed) const;
};
ResolvedScenario resolve(const ScenarioSpec& s);

/// Seeds of the training batch, holdout batch and planner for one replication seed.
std::uint64_t training_seed(std::uint64_t seed);
std::uint64_t holdout_seed(std::uint64_t seed);
std::uint64_t planner_seed(std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  Plan best_plan;
  RewardBreakdown train;
  double holdout_f1 = 0.0;
  double holdout_silhouette = 0.0;
  bool holdout_degenerate = false;
  long evaluations = 0;
  std::string trace;  // planner progress lines
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 with fewer than two values
  int n = 0;
};
Aggregate aggregate(const std::vector<double>& values);

struct ReplicationResult {
  std::string fingerprint;
  std::string label;
  ExperimentConfig config;
  ResolvedScenario resolved;
  std::vector<SeedResult> seeds;
  Aggregate train_f1, train_silhouette, train_total, holdout_f1, holdout_silhouette;

  void recompute_aggregates();
};

/// Seed results shared between experiments that resolve to the same job (for example
/// the full-range scenario and gap halvings 0). Thread-safe.
class ResultCache {
 public:
  std::optional<SeedResult> find(const std::string& key) const;
  void store(const std::string& key, const SeedResult& r);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, SeedResult> entries_;
};

struct RunOptions {
  const Executor* executor = nullptr;
  ResultCache* cache = nullptr;
  // when set, results are written under <out_dir>/<fingerprint>/
  std::optional<std::string> out_dir;
};

/// Train -> plan search -> fit clusters -> fresh holdout -> assign -> score, per seed.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const Executor* executor = nullptr);
ReplicationResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// ---- suites. `base` supplies planner, seeds, metric and sizes; the scenario is replaced.

std::vector<ReplicationResult> run_full_range_suite(const ExperimentConfig& base, const RunOptions& opts);
/// [F, L, R]; at depth 0 L and R are the full-range result.
std::vector<ReplicationResult> run_bipartition_suite(Factor factor, int depth, const ExperimentConfig& base,
                                                     const RunOptions& opts);
/// halvings 0..4
std::vector<ReplicationResult> run_gap_suite(Factor factor, const ExperimentConfig& base, const RunOptions& opts);

struct TwoFactorGrid {
  // [primary][secondary]; empty on the diagonal and for excluded pairs
  std::array<std::array<std::optional<ReplicationResult>, 5>, 5> cells;
  std::vector<std::pair<Factor, Factor>> skipped;
};
TwoFactorGrid run_two_factor_grid(const ExperimentConfig& base, const RunOptions& opts);
std::vector<ReplicationResult> run_anm_suite(const ExperimentConfig& base, const RunOptions& opts,
                                             bool zero_noise = false);

// ---- persistence

/// details.csv, summary.json, trace.log under <out_dir>/<fingerprint>/.
void write_result(const ReplicationResult& r, const std::string& out_dir);
std::string details_csv(const ReplicationResult& r);
std::string summary_json(const ReplicationResult& r);
ReplicationResult read_summary(const std::string& path);
/// One aggregate row per result.
void write_suite_table(const std::vector<ReplicationResult>& results, const std::string& path);
/// f1_matrix.csv and silhouette_matrix.csv in primary-row / secondary-column layout.
void write_grid_tables(const TwoFactorGrid& grid, const std::string& dir);
/// Regenerates details.csv for every summary under `dir` and writes dir/table.csv.
/// Returns the number of results found.
std::size_t regenerate_reports(const std::string& dir);

}  // namespace curio
