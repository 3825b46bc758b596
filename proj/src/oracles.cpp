#include "curio/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "curio/policy.hpp"
#include "curio/random.hpp"

namespace curio {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Trajectory random_series(Rng& rng, std::size_t len, std::size_t dim) {
  Trajectory t(len, dim);
  for (double& v : t.samples) v = uniform(rng, -1.0, 1.0);
  return t;
}

}  // namespace

double soft_dtw_brute_force(const Trajectory& a, const Trajectory& b, double gamma, std::span<const double> weights) {
  if (a.dim != b.dim) throw std::invalid_argument("dimension mismatch");
  const std::size_t n = a.frames, m = b.frames;
  auto cost = [&](std::size_t i, std::size_t j) {
    double c = 0.0;
    for (std::size_t d = 0; d < a.dim; ++d) {
      const double diff = a.at(i, d) - b.at(j, d);
      c += (weights.empty() ? 1.0 : weights[d]) * diff * diff;
    }
    return c;
  };
  // collect every path cost, then soft-min them in one log-sum-exp
  std::vector<double> totals;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += cost(i, j);
    if (i == n - 1 && j == m - 1) {
      totals.push_back(acc);
      return;
    }
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  const double lo = *std::min_element(totals.begin(), totals.end());
  if (gamma == 0.0) return lo;
  double s = 0.0;
  for (double c : totals) s += std::exp(-(c - lo) / gamma);
  return lo - gamma * std::log(s);
}

double silhouette_direct(const std::vector<std::vector<double>>& d, const std::vector<std::uint8_t>& labels) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double same = 0.0, other = 0.0;
    int n_same = 0, n_other = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        same += d[i][j];
        ++n_same;
      } else {
        other += d[i][j];
        ++n_other;
      }
    }
    if (n_same == 0) continue;  // singleton cluster scores 0
    const double a = same / n_same, b = other / n_other;
    if (std::max(a, b) > 0.0) total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

double simulated_stopping_distance(double v0, double mu, double gravity) {
  FactorAssignment f = FactorAssignment::defaults();
  f[Factor::LateralFriction] = mu;
  f[Factor::Gravity] = gravity;
  SimConfig cfg;
  cfg.frames = 1200;
  cfg.pusher_start = {-50.0, 0.0};
  PusherBlockSim sim(f, cfg);
  SimState s = sim.state();
  const double x0 = s.x;
  s.vx = v0;
  sim.set_state(s);
  sim.advance({0.0, 0.0}, cfg.frames);
  return sim.state().x - x0;
}

PlanObjective quadratic_objective(const std::vector<double>& optimum) {
  return [optimum](const std::vector<Plan>& plans) {
    std::vector<RewardBreakdown> out;
    for (const Plan& p : plans) {
      if (p.controls.size() != optimum.size()) throw std::invalid_argument("plan size does not match the optimum");
      double s = 0.0;
      for (std::size_t i = 0; i < optimum.size(); ++i) s += (p.controls[i] - optimum[i]) * (p.controls[i] - optimum[i]);
      RewardBreakdown r;
      r.total = -s;
      out.push_back(r);
    }
    return out;
  };
}

std::vector<double> quadratic_optimum(int horizon, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x0b7));
  std::vector<double> x(static_cast<std::size_t>(horizon * kPlanDof));
  for (double& v : x) v = uniform(rng, -0.8, 0.8);
  return x;
}

CemConfig quadratic_cem_config() {
  CemConfig cfg;
  // the 0.02 floor used for rollouts keeps every sample ~0.02 away per coordinate
  cfg.min_std = 0.001;
  return cfg;
}

OracleCheck check_soft_dtw(std::uint64_t seed, int pairs) {
  const auto t0 = Clock::now();
  OracleCheck c{"soft-DTW vs path enumeration", false, 0.0, 1e-9, 0.0, {}};
  Rng rng(derive_seed(seed, 0x5d7));
  for (int k = 0; k < pairs; ++k) {
    const std::size_t dim = k % 2 ? 3 : 2;
    const Trajectory a = random_series(rng, 1 + rng() % 6, dim);
    const Trajectory b = random_series(rng, 1 + rng() % 6, dim);
    const std::vector<double> w = dim == 3 ? frame_weights(3, 0.075) : std::vector<double>{};
    for (double gamma : {0.0, 0.1, 1.0}) {
      const double err = std::abs(soft_dtw(a, b, gamma, w) - soft_dtw_brute_force(a, b, gamma, w));
      c.measured = std::max(c.measured, err);
    }
  }
  c.seconds = seconds_since(t0);
  c.passed = c.measured < c.tolerance;
  c.detail = fmt("%g pairs x 3 gammas, max abs error %.3g", pairs, c.measured);
  return c;
}

OracleCheck check_silhouette(std::uint64_t seed, int fixtures) {
  const auto t0 = Clock::now();
  OracleCheck c{"silhouette vs direct formula", false, 0.0, 1e-12, 0.0, {}};
  Rng rng(derive_seed(seed, 0x511));
  for (int k = 0; k < fixtures; ++k) {
    const std::size_t n = 3 + rng() % 8;
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = uniform(rng, 0.0, 5.0);
    std::vector<std::uint8_t> labels(n);
    do {
      for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 2);
    } while (std::count(labels.begin(), labels.end(), 1) == 0 ||
             std::count(labels.begin(), labels.end(), 0) == 0);
    std::vector<double> flat;
    for (const auto& row : d) flat.insert(flat.end(), row.begin(), row.end());
    const DistanceMatrix dm = DistanceMatrix::from_values(n, flat);
    c.measured = std::max(c.measured, std::abs(silhouette(dm, labels) - silhouette_direct(d, labels)));
  }
  c.seconds = seconds_since(t0);
  c.passed = c.measured < c.tolerance;
  c.detail = fmt("%g fixtures, max abs error %.3g", fixtures, c.measured);
  return c;
}

OracleCheck check_stopping_distance() {
  const auto t0 = Clock::now();
  OracleCheck c{"Coulomb stopping distance", false, 0.0, 0.02, 0.0, {}};
  const double triples[10][3] = {{0.5, 0.5, -9.81}, {0.2, 0.1, -9.81}, {1.0, 1.0, -9.81}, {0.5, 0.3, -5.0},
                                 {0.3, 0.2, -2.0},  {0.8, 0.6, -11.5}, {0.4, 0.1, -11.5}, {0.6, 0.9, -1.0},
                                 {0.25, 0.05, -9.81}, {1.0, 0.5, -3.0}};
  for (const auto& t : triples) {
    const double sim = simulated_stopping_distance(t[0], t[1], t[2]);
    const double exact = analytic_stopping_distance(t[0], t[1], t[2]);
    c.measured = std::max(c.measured, std::abs(sim / exact - 1.0));
  }
  c.seconds = seconds_since(t0);
  c.passed = c.measured < c.tolerance;
  c.detail = fmt("10 (v0, mu, g) triples, max relative error %.3g", c.measured);
  return c;
}

OracleCheck check_cem_quadratic(std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleCheck c{"CEM on a quadratic", false, 0.0, 1e-2, 0.0, {}};
  const CemConfig cfg = quadratic_cem_config();
  const auto optimum = quadratic_optimum(cfg.horizon, seed);
  const PlanSearchResult r = cem_search(cfg, seed, quadratic_objective(optimum));
  for (std::size_t i = 0; i < optimum.size(); ++i)
    c.measured = std::max(c.measured, std::abs(r.best_plan.controls[i] - optimum[i]));
  c.seconds = seconds_since(t0);
  c.passed = c.measured <= c.tolerance;
  c.detail = fmt("%g iterations, worst coordinate error %.3g", cfg.iterations, c.measured);
  return c;
}

OracleCheck check_ppo_gradient(std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleCheck c{"PPO loss gradient", false, 0.0, 1e-4, 0.0, {}};
  PolicyNet net(9, kPlanDof, {256, 128});
  Rng rng(derive_seed(seed, 0x9a0));
  net.init(rng, false);
  for (int d = 0; d < kPlanDof; ++d) net.params()[net.log_std_offset() + d] = uniform(rng, -0.5, 0.5);
  const int n = 48;
  PpoBatch b;
  b.obs = Mat(9, n);
  b.actions = Mat(kPlanDof, n);
  b.old_log_prob = Vec(n);
  b.advantages = Vec(n);
  b.returns = Vec(n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < 9; ++r) b.obs(r, i) = uniform(rng, -1.0, 1.0);
    for (int d = 0; d < kPlanDof; ++d) b.actions(d, i) = uniform(rng, -1.5, 1.5);
    b.advantages[i] = uniform(rng, -1.0, 1.0);
    b.returns[i] = uniform(rng, -1.0, 1.0);
  }
  // old log-probs chosen so ratios sit on both sides of the clip window but off its edges
  const Vec lp = gaussian_log_prob(net.forward(b.obs).mean, net.log_std(), b.actions);
  const double ratios[4] = {0.5, 0.9, 1.1, 1.5};
  for (int i = 0; i < n; ++i) b.old_log_prob[i] = lp[i] - std::log(ratios[i % 4]);
  PpoLossCoefs coefs;
  coefs.entropy_coef = 0.01;
  c.measured = gradient_check(net, b, coefs, 64, seed);
  c.seconds = seconds_since(t0);
  c.passed = c.measured < c.tolerance;
  c.detail = fmt("64 of %g parameters, max relative error %.3g", static_cast<double>(net.param_count()), c.measured);
  return c;
}

std::vector<OracleCheck> run_oracle_suite() {
  return {check_soft_dtw(), check_silhouette(), check_stopping_distance(), check_cem_quadratic(),
          check_ppo_gradient()};
}

}  // namespace curio
