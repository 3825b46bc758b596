#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "curio/parallel.hpp"
#include "curio/planners.hpp"
#include "curio/policy.hpp"

namespace curio {

void PpoConfig::validate() const {
  if (n_envs < 4 || n_epochs < 1 || iterations < 1 || horizon < 1 || eval_every < 1 || minibatch_size < 1)
    throw std::invalid_argument("PPO counts must be positive (n_envs >= 4)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(clip_range > 0.0 && clip_range < 1.0)) throw std::invalid_argument("clip_range must lie in (0, 1)");
  if (!(gamma_discount > 0.0 && gamma_discount <= 1.0)) throw std::invalid_argument("discount must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must lie in [0, 1]");
  if (!(max_grad_norm > 0.0) || !(vf_coef >= 0.0) || !(entropy_coef >= 0.0))
    throw std::invalid_argument("PPO loss weights must be non-negative");
  for (int h : hidden_sizes)
    if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
}

namespace {

constexpr int kStateDim = 8;

class Episode {
 public:
  Episode(const EnvironmentBatch& batch, const SimConfig& sim, const PpoConfig& cfg, const Executor* executor)
      : cfg_(cfg), executor_(executor), segment_(sim.frames / cfg.horizon) {
    sims_.reserve(batch.specs.size());
    for (const auto& spec : batch.specs) sims_.emplace_back(spec, sim);
  }

  Vec observe(int step) const {
    Vec obs = Vec::Zero(kStateDim + 1);
    const std::size_t n = cfg_.mean_observation ? sims_.size() : 1;
    for (std::size_t e = 0; e < n; ++e) {
      const SimState& s = sims_[e].state();
      obs += (Vec(kStateDim + 1) << s.x, s.y, s.theta, s.vx, s.vy, s.omega, s.px, s.py, 0.0).finished();
    }
    obs /= static_cast<double>(n);
    obs[kStateDim] = static_cast<double>(step) / cfg_.horizon;
    return obs;
  }

  // one command for every environment
  void act(std::array<double, 2> command) {
    for_each_index(executor_, sims_.size(), [&](std::size_t e) { sims_[e].advance(command, segment_); });
  }

  std::vector<Trajectory> finish() {
    std::vector<Trajectory> out;
    out.reserve(sims_.size());
    for (auto& s : sims_) out.push_back(s.take_trajectory());
    return out;
  }

 private:
  const PpoConfig& cfg_;
  const Executor* executor_;
  int segment_;
  std::vector<PusherBlockSim> sims_;
};

struct Evaluation {
  Plan plan;
  RewardBreakdown reward;
};

// Mean-action rollout; the action sequence doubles as an open-loop plan.
Evaluation evaluate_mean_policy(const PolicyNet& net, const PlanEvaluator& evaluator, const PpoConfig& cfg) {
  Episode ep(evaluator.batch(), evaluator.sim(), cfg, evaluator.executor());
  Plan plan(cfg.horizon);
  for (int t = 0; t < cfg.horizon; ++t) {
    const Mat mean = net.forward(ep.observe(t)).mean;
    plan.at(t, 0) = std::clamp(mean(0, 0), -1.0, 1.0);
    plan.at(t, 1) = std::clamp(mean(1, 0), -1.0, 1.0);
    ep.act({plan.at(t, 0), plan.at(t, 1)});
  }
  const auto trajs = ep.finish();
  return {std::move(plan), evaluator.score(trajs)};
}

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

PlanSearchResult ppo_optimize(const EnvironmentBatch& batch, const SimConfig& sim, const PpoConfig& cfg,
                              std::uint64_t seed, const MetricConfig& metric, const Executor* executor,
                              std::ostream* log) {
  cfg.validate();
  if (static_cast<int>(batch.specs.size()) != cfg.n_envs)
    throw std::invalid_argument("batch size does not match PpoConfig.n_envs");
  sim.validate(cfg.horizon);
  const PlanEvaluator evaluator(batch, sim, metric, executor);

  PolicyNet net(kStateDim + 1, kPlanDof, cfg.hidden_sizes);
  Rng init_rng(derive_seed(seed, 0x990));
  net.init(init_rng, true);
  Adam adam(net.param_count(), cfg.learning_rate);
  Rng rng(derive_seed(seed, 0x5a3));
  std::normal_distribution<double> normal(0.0, 1.0);
  const PpoLossCoefs coefs{cfg.clip_range, cfg.vf_coef, cfg.entropy_coef};

  PlanSearchResult result;
  result.seed = seed;
  bool have_best = false;
  auto record = [&](int episode) {
    Evaluation ev = evaluate_mean_policy(net, evaluator, cfg);
    ++result.evaluations;
    if (!have_best || ev.reward.total > result.best_reward.total) {
      result.best_plan = ev.plan;
      result.best_reward = ev.reward;
      have_best = true;
    }
    IterationRecord rec{episode, ev.reward.total, ev.reward.f1, ev.reward.silhouette, ev.reward.total};
    result.reward_trace.push_back(ev.reward.total);
    result.records.push_back(rec);
    if (log) write_progress(*log, rec);
  };

  const int H = cfg.horizon;
  const Eigen::Index n_rec = static_cast<Eigen::Index>(H) * cfg.n_envs;
  for (int episode = 0; episode < cfg.iterations; ++episode) {
    if (episode % cfg.eval_every == 0) record(episode);

    Episode ep(batch, sim, cfg, executor);
    Mat obs(net.obs_dim(), H), actions(kPlanDof, H);
    Vec values(H), log_probs(H);
    for (int t = 0; t < H; ++t) {
      obs.col(t) = ep.observe(t);
      const auto out = net.forward(obs.col(t));
      const Vec std_dev = net.log_std().array().exp();
      for (int d = 0; d < kPlanDof; ++d) actions(d, t) = out.mean(d, 0) + std_dev[d] * normal(rng);
      values[t] = out.value[0];
      log_probs[t] = gaussian_log_prob(out.mean, net.log_std(), actions.col(t))[0];
      ep.act({std::clamp(actions(0, t), -1.0, 1.0), std::clamp(actions(1, t), -1.0, 1.0)});
    }
    const auto trajs = ep.finish();
    const RewardBreakdown reward = evaluator.score(trajs);
    ++result.evaluations;

    // reward only at the terminal decision point, shared by every environment
    Vec rewards = Vec::Zero(H);
    rewards[H - 1] = reward.total;
    Vec adv(H);
    double next_adv = 0.0, next_value = 0.0;
    for (int t = H - 1; t >= 0; --t) {
      const double delta = rewards[t] + cfg.gamma_discount * next_value - values[t];
      next_adv = delta + cfg.gamma_discount * cfg.gae_lambda * next_adv;
      adv[t] = next_adv;
      next_value = values[t];
    }
    const Vec returns = adv + values;

    // one record per environment and decision point
    PpoBatch buffer;
    buffer.obs.resize(net.obs_dim(), n_rec);
    buffer.actions.resize(kPlanDof, n_rec);
    buffer.old_log_prob.resize(n_rec);
    buffer.advantages.resize(n_rec);
    buffer.returns.resize(n_rec);
    for (int t = 0; t < H; ++t)
      for (int e = 0; e < cfg.n_envs; ++e) {
        const Eigen::Index r = static_cast<Eigen::Index>(t) * cfg.n_envs + e;
        buffer.obs.col(r) = obs.col(t);
        buffer.actions.col(r) = actions.col(t);
        buffer.old_log_prob[r] = log_probs[t];
        buffer.advantages[r] = adv[t];
        buffer.returns[r] = returns[t];
      }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rec));
    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch_size)) {
        const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.minibatch_size));
        PpoBatch mb;
        mb.obs.resize(net.obs_dim(), static_cast<Eigen::Index>(len));
        mb.actions.resize(kPlanDof, static_cast<Eigen::Index>(len));
        mb.old_log_prob.resize(static_cast<Eigen::Index>(len));
        mb.advantages.resize(static_cast<Eigen::Index>(len));
        mb.returns.resize(static_cast<Eigen::Index>(len));
        for (std::size_t k = 0; k < len; ++k) {
          const Eigen::Index src = order[start + k];
          const auto dst = static_cast<Eigen::Index>(k);
          mb.obs.col(dst) = buffer.obs.col(src);
          mb.actions.col(dst) = buffer.actions.col(src);
          mb.old_log_prob[dst] = buffer.old_log_prob[src];
          mb.advantages[dst] = buffer.advantages[src];
          mb.returns[dst] = buffer.returns[src];
        }
        if (len > 1) {
          const double mean = mb.advantages.mean();
          const double sd = std::sqrt((mb.advantages.array() - mean).square().sum() / static_cast<double>(len - 1));
          mb.advantages = ((mb.advantages.array() - mean) / (sd + 1e-8)).matrix();
        }
        Vec grad;
        const PpoLoss loss = ppo_loss(net, mb, coefs, &grad);
        if (!std::isfinite(loss.total) || !all_finite(grad))
          throw TrainingError("non-finite PPO loss at episode " + std::to_string(episode) + " (policy " +
                              std::to_string(loss.policy) + ", value " + std::to_string(loss.value) +
                              "); check the learning rate against the reward scale");
        clip_grad_norm(grad, cfg.max_grad_norm);
        adam.step(net.params(), grad);
      }
    }
  }
  record(cfg.iterations);
  return result;
}

}  // namespace curio
