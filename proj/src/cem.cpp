#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "curio/parallel.hpp"
#include "curio/planners.hpp"
#include "curio/random.hpp"

namespace curio {

PlanEvaluator::PlanEvaluator(const EnvironmentBatch& batch, const SimConfig& sim, const MetricConfig& metric,
                             const Executor* executor)
    : batch_(batch), sim_(sim), metric_(metric), executor_(executor) {
  if (batch.specs.size() < 4) throw std::invalid_argument("plan evaluation needs at least four environments");
  if (batch.true_labels.size() != batch.specs.size()) throw std::invalid_argument("batch labels do not match specs");
  metric.validate();
}

std::vector<Trajectory> PlanEvaluator::trajectories(const Plan& plan) const {
  return rollout_batch(batch_, plan, sim_, executor_);
}

RewardBreakdown PlanEvaluator::score(std::span<const Trajectory> trajs) const {
  const DistanceMatrix d = pairwise_distances(trajs, metric_, executor_);
  const ClusterModel model = fit_two_medoids(d, trajs, metric_);
  return curiosity_reward(d, model.training_labels, batch_.true_labels, metric_);
}

RewardBreakdown PlanEvaluator::operator()(const Plan& plan) const { return score(trajectories(plan)); }

void CemConfig::validate() const {
  if (n_envs < 4 || plans_per_iter < 1 || iterations < 1 || horizon < 1 || frames < 1)
    throw std::invalid_argument("CEM counts must be positive (n_envs >= 4)");
  if (!(elite_ratio > 0.0 && elite_ratio <= 1.0)) throw std::invalid_argument("elite_ratio must lie in (0, 1]");
  if (!(init_std > 0.0) || !(min_std >= 0.0)) throw std::invalid_argument("CEM std settings must be positive");
  if (!(extra_std_start >= 0.0) || (extra_std_start > 0.0 && !(extra_std_end > 0.0)))
    throw std::invalid_argument("CEM extra noise must be non-negative, with a positive end value");
}

int CemConfig::elite_count() const {
  return std::max(1, static_cast<int>(std::lround(elite_ratio * plans_per_iter)));
}

void write_progress(std::ostream& out, const IterationRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\t%.10g\n", r.iteration, r.best_total, r.f1, r.silhouette);
  out << buf;
}

namespace {

struct Candidate {
  Plan plan;
  RewardBreakdown reward;
};

// Extra sampling noise added to the elite variance, decaying geometrically over the run.
// Without it two elites in twelve coordinates collapse the spread long before the mean settles.
double extra_std(const CemConfig& cfg, int it) {
  if (cfg.extra_std_start <= 0.0) return 0.0;
  if (cfg.iterations == 1) return cfg.extra_std_start;
  const double frac = static_cast<double>(it) / static_cast<double>(cfg.iterations - 1);
  return cfg.extra_std_start * std::pow(cfg.extra_std_end / cfg.extra_std_start, frac);
}

}  // namespace

PlanSearchResult cem_search(const CemConfig& cfg, std::uint64_t seed, const PlanObjective& objective,
                            std::ostream* log) {
  cfg.validate();
  const std::size_t dims = static_cast<std::size_t>(cfg.horizon * kPlanDof);
  const std::size_t n_elite = static_cast<std::size_t>(cfg.elite_count());
  Rng rng(derive_seed(seed, 0xce1));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> mean(dims, 0.0), stdev(dims, cfg.init_std);
  std::vector<Candidate> elites;
  PlanSearchResult result;
  result.seed = seed;
  bool have_best = false;

  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Plan> plans;
    plans.reserve(static_cast<std::size_t>(cfg.plans_per_iter));
    for (int p = 0; p < cfg.plans_per_iter; ++p) {
      Plan plan(cfg.horizon);
      for (std::size_t k = 0; k < dims; ++k) {
        const double v = it == 0 ? uniform(rng, -1.0, 1.0) : mean[k] + stdev[k] * normal(rng);
        plan.controls[k] = std::clamp(v, -1.0, 1.0);
      }
      plans.push_back(std::move(plan));
    }
    const std::vector<RewardBreakdown> rewards = objective(plans);
    if (rewards.size() != plans.size()) throw std::logic_error("objective returned the wrong number of scores");
    result.evaluations += static_cast<long>(plans.size());

    std::vector<Candidate> pool;
    if (cfg.keep_elites) pool = elites;
    std::size_t best_fresh = 0;
    for (std::size_t p = 0; p < plans.size(); ++p) {
      if (rewards[p].total > rewards[best_fresh].total) best_fresh = p;
      pool.push_back({plans[p], rewards[p]});
    }
    if (!have_best || rewards[best_fresh].total > result.best_reward.total) {
      result.best_plan = plans[best_fresh];
      result.best_reward = rewards[best_fresh];
      have_best = true;
    }
    // stable: earlier (older) candidates win ties
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) { return a.reward.total > b.reward.total; });
    pool.resize(std::min(n_elite, pool.size()));
    elites = std::move(pool);

    double elite_mean = 0.0;
    for (const auto& e : elites) elite_mean += e.reward.total;
    elite_mean /= static_cast<double>(elites.size());

    const double extra = extra_std(cfg, it);
    for (std::size_t k = 0; k < dims; ++k) {
      double mu = 0.0;
      for (const auto& e : elites) mu += e.plan.controls[k];
      mu /= static_cast<double>(elites.size());
      double var = 0.0;
      for (const auto& e : elites) var += (e.plan.controls[k] - mu) * (e.plan.controls[k] - mu);
      var /= static_cast<double>(elites.size());
      mean[k] = mu;
      stdev[k] = std::max(std::sqrt(var + extra * extra), cfg.min_std);
    }

    const RewardBreakdown& b = rewards[best_fresh];
    IterationRecord rec{it, b.total, b.f1, b.silhouette, elite_mean};
    result.reward_trace.push_back(b.total);
    result.records.push_back(rec);
    if (log) write_progress(*log, rec);
  }
  return result;
}

PlanSearchResult cem_optimize(const EnvironmentBatch& batch, const SimConfig& sim, const CemConfig& cfg,
                              std::uint64_t seed, const MetricConfig& metric, const Executor* executor,
                              std::ostream* log) {
  cfg.validate();
  if (static_cast<int>(batch.specs.size()) != cfg.n_envs)
    throw std::invalid_argument("batch size does not match CemConfig.n_envs");
  if (cfg.frames != sim.frames) throw std::invalid_argument("CemConfig.frames does not match SimConfig.frames");
  const PlanEvaluator evaluate(batch, sim, metric, executor);
  const PlanObjective objective = [&](const std::vector<Plan>& plans) {
    std::vector<RewardBreakdown> out(plans.size());
    for_each_index(executor, plans.size(), [&](std::size_t p) { out[p] = evaluate(plans[p]); });
    return out;
  };
  return cem_search(cfg, seed, objective, log);
}

}  // namespace curio
