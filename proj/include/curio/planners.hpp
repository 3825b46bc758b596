#pragma once

// Plan search: cross-entropy method over open-loop plans, and a PPO policy planner that
// drives every environment with the same action and learns from one shared reward.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "curio/clustering.hpp"
#include "curio/factors.hpp"
#include "curio/metrics.hpp"
#include "curio/sim.hpp"

namespace curio {

class Executor;

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IterationRecord {
  int iteration = 0;
  double best_total = 0.0;  // best fresh sample of this iteration
  double f1 = 0.0;
  double silhouette = 0.0;
  double elite_mean = 0.0;
};

struct PlanSearchResult {
  Plan best_plan;
  RewardBreakdown best_reward;
  std::vector<double> reward_trace;
  std::vector<IterationRecord> records;
  long evaluations = 0;  // batch rollouts
  std::uint64_t seed = 0;
};

/// Rolls a plan out on a batch, fits the two-medoid model and scores it against the labels.
class PlanEvaluator {
 public:
  PlanEvaluator(const EnvironmentBatch& batch, const SimConfig& sim, const MetricConfig& metric,
                const Executor* executor = nullptr);

  RewardBreakdown operator()(const Plan& plan) const;
  RewardBreakdown score(std::span<const Trajectory> trajs) const;
  std::vector<Trajectory> trajectories(const Plan& plan) const;

  const EnvironmentBatch& batch() const { return batch_; }
  const SimConfig& sim() const { return sim_; }
  const MetricConfig& metric() const { return metric_; }
  const Executor* executor() const { return executor_; }

 private:
  const EnvironmentBatch& batch_;
  SimConfig sim_;
  MetricConfig metric_;
  const Executor* executor_;
};

// ---- CEM

struct CemConfig {
  int n_envs = 20;
  int plans_per_iter = 5;
  int iterations = 100;
  double elite_ratio = 0.4;
  int horizon = 6;
  int frames = 198;
  double init_std = 0.5;
  double min_std = 0.02;
  // decaying noise added to the refit variance (geometric from start to end); 0 disables
  double extra_std_start = 0.2;
  double extra_std_end = 0.001;
  // previous elites compete with fresh samples when selecting the next elite set
  bool keep_elites = true;

  void validate() const;
  int elite_count() const;
};

/// Scores a set of candidate plans; `total` drives selection.
using PlanObjective = std::function<std::vector<RewardBreakdown>(const std::vector<Plan>&)>;

/// CEM on an arbitrary objective. `log` receives one tab-separated line per iteration.
PlanSearchResult cem_search(const CemConfig& cfg, std::uint64_t seed, const PlanObjective& objective,
                            std::ostream* log = nullptr);

PlanSearchResult cem_optimize(const EnvironmentBatch& batch, const SimConfig& sim, const CemConfig& cfg,
                              std::uint64_t seed, const MetricConfig& metric = {}, const Executor* executor = nullptr,
                              std::ostream* log = nullptr);

// ---- PPO

struct PpoConfig {
  int n_envs = 20;
  double gamma_discount = 0.9995;
  double entropy_coef = 0.0;
  double learning_rate = 5e-5;
  double vf_coef = 0.5;
  double max_grad_norm = 10.0;
  int n_epochs = 4;
  int iterations = 500;  // episodes
  std::vector<int> hidden_sizes{256, 128};
  double clip_range = 0.2;
  double gae_lambda = 0.95;
  int minibatch_size = 64;
  int horizon = 6;
  // deterministic mean-action evaluation period, in episodes
  int eval_every = 10;
  // observe the mean state across environments instead of environment 0
  bool mean_observation = false;

  void validate() const;
};

PlanSearchResult ppo_optimize(const EnvironmentBatch& batch, const SimConfig& sim, const PpoConfig& cfg,
                              std::uint64_t seed, const MetricConfig& metric = {}, const Executor* executor = nullptr,
                              std::ostream* log = nullptr);

/// Tab-separated progress line: iteration, best_total, f1, silhouette.
void write_progress(std::ostream& out, const IterationRecord& r);

}  // namespace curio
