#include "curio/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curio/parallel.hpp"
#include "curio/simd/soft_dtw.hpp"

namespace curio {

void MetricConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite and >= 0");
  if (!(theta_weight >= 0.0)) throw std::invalid_argument("theta_weight must be >= 0");
  if (!std::isfinite(k)) throw std::invalid_argument("k must be finite");
}

std::vector<double> frame_weights(std::size_t dim, double theta_weight) {
  std::vector<double> w(dim, 1.0);
  if (dim >= 3) w[2] = theta_weight * theta_weight;
  return w;
}

namespace {

simd::SeriesRef ref(const Trajectory& t) { return {t.samples.data(), t.frames}; }

void check_pair(const Trajectory& a, const Trajectory& b) {
  if (a.frames == 0 || b.frames == 0) throw std::invalid_argument("soft-DTW needs nonempty trajectories");
  if (a.dim != b.dim) throw std::invalid_argument("trajectory dimension mismatch");
}

// Tasks per batch call. Fixed so the split never depends on the executor.
constexpr std::size_t kChunk = 64;

void run_tasks(std::span<const simd::PairTask> tasks, std::size_t dim, std::span<const double> w, double gamma,
               std::span<double> out, const Executor* executor) {
  const std::size_t chunks = (tasks.size() + kChunk - 1) / kChunk;
  for_each_index(executor, chunks, [&](std::size_t c) {
    const std::size_t lo = c * kChunk;
    const std::size_t len = std::min(kChunk, tasks.size() - lo);
    simd::soft_dtw_batch(tasks.subspan(lo, len), dim, w, gamma, out.subspan(lo, len));
  });
}

}  // namespace

double soft_dtw(const Trajectory& a, const Trajectory& b, double gamma, std::span<const double> weights) {
  check_pair(a, b);
  std::vector<double> unit;
  if (weights.empty()) {
    unit.assign(a.dim, 1.0);
    weights = unit;
  }
  const simd::PairTask task{ref(a), ref(b)};
  double out = 0.0;
  simd::soft_dtw_batch({&task, 1}, a.dim, weights, gamma, {&out, 1});
  return out;
}

double trajectory_distance(const Trajectory& a, const Trajectory& b, const MetricConfig& cfg) {
  check_pair(a, b);
  const auto w = frame_weights(a.dim, cfg.theta_weight);
  if (cfg.kind == DistanceKind::Raw) return soft_dtw(a, b, cfg.gamma, w);
  const simd::PairTask tasks[3] = {{ref(a), ref(b)}, {ref(a), ref(a)}, {ref(b), ref(b)}};
  double s[3];
  simd::soft_dtw_batch(tasks, a.dim, w, cfg.gamma, s);
  return s[0] - 0.5 * (s[1] + s[2]);
}

DistanceMatrix DistanceMatrix::from_values(std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) throw std::invalid_argument("distance matrix must be n x n");
  DistanceMatrix d(n);
  d.values = std::move(values);
  return d;
}

DistanceMatrix pairwise_distances(std::span<const Trajectory> trajs, const MetricConfig& cfg,
                                  const Executor* executor) {
  cfg.validate();
  const std::size_t n = trajs.size();
  if (n < 2) throw std::invalid_argument("pairwise_distances needs at least two trajectories");
  for (std::size_t i = 1; i < n; ++i) check_pair(trajs[0], trajs[i]);
  const std::size_t dim = trajs[0].dim;
  const auto w = frame_weights(dim, cfg.theta_weight);

  std::vector<simd::PairTask> tasks;
  tasks.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) tasks.push_back({ref(trajs[i]), ref(trajs[j])});
  const std::size_t pairs = tasks.size();
  for (std::size_t i = 0; i < n; ++i) tasks.push_back({ref(trajs[i]), ref(trajs[i])});

  std::vector<double> s(tasks.size());
  run_tasks(tasks, dim, w, cfg.gamma, s, executor);

  DistanceMatrix d(n);
  d.gamma = cfg.gamma;
  d.kind = cfg.kind;
  d.pair_evaluations = pairs;
  d.self_evaluations = n;
  const double* self = s.data() + pairs;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = cfg.kind == DistanceKind::Raw ? self[i] : 0.0;
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      const double v = cfg.kind == DistanceKind::Raw ? s[k] : s[k] - 0.5 * (self[i] + self[j]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

DistanceMatrix pairwise_distances(std::span<const Trajectory> trajs, double gamma) {
  const std::size_t n = trajs.size();
  if (n < 2) throw std::invalid_argument("pairwise_distances needs at least two trajectories");
  for (std::size_t i = 1; i < n; ++i) check_pair(trajs[0], trajs[i]);
  DistanceMatrix d(n);
  d.gamma = gamma;
  d.kind = DistanceKind::Raw;
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = soft_dtw(trajs[i], trajs[i], gamma);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = soft_dtw(trajs[i], trajs[j], gamma);
      d(i, j) = v;
      d(j, i) = v;
      ++d.pair_evaluations;
    }
  }
  d.self_evaluations = n;
  return d;
}

double silhouette(const DistanceMatrix& d, std::span<const std::uint8_t> labels, bool clamp_negative) {
  const std::size_t n = d.n;
  if (labels.size() != n) throw std::invalid_argument("silhouette: label count mismatch");
  if (n < 3) throw std::invalid_argument("silhouette needs at least three points");
  std::size_t count[2] = {0, 0};
  for (auto l : labels) {
    if (l > 1) throw std::invalid_argument("silhouette: labels must be 0 or 1");
    ++count[l];
  }
  if (count[0] == 0 || count[1] == 0) throw std::invalid_argument("silhouette: a cluster is empty");

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t li = labels[i];
    if (count[li] == 1) continue;  // singleton contributes 0
    double intra = 0.0, inter = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double v = d(i, j);
      if (clamp_negative) v = std::max(v, 0.0);
      (labels[j] == li ? intra : inter) += v;
    }
    const double a = intra / static_cast<double>(count[li] - 1);
    const double b = inter / static_cast<double>(count[1 - li]);
    const double denom = std::max(a, b);
    if (denom > 0.0) sum += (b - a) / denom;
  }
  return sum / static_cast<double>(n);
}

namespace {

double macro_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, bool swap) {
  double f1 = 0.0;
  for (std::uint8_t c = 0; c < 2; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const std::uint8_t p = swap ? static_cast<std::uint8_t>(1 - pred[i]) : pred[i];
      if (p == c && truth[i] == c) ++tp;
      else if (p == c) ++fp;
      else if (truth[i] == c) ++fn;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom > 0) f1 += 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f1 / 2.0;
}

}  // namespace

double f1_matched(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("f1_matched: length mismatch");
  if (pred.size() < 2) throw std::invalid_argument("f1_matched needs at least two labels");
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] > 1 || truth[i] > 1) throw std::invalid_argument("f1_matched: labels must be 0 or 1");
  return std::max(macro_f1(pred, truth, false), macro_f1(pred, truth, true));
}

RewardBreakdown curiosity_reward(const DistanceMatrix& d, std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth, const MetricConfig& cfg) {
  if (pred.size() != d.n || truth.size() != d.n) throw std::invalid_argument("curiosity_reward: length mismatch");
  RewardBreakdown r;
  r.k = cfg.k;
  r.f1 = f1_matched(pred, truth);
  const auto ones = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), std::uint8_t{1}));
  r.degenerate = ones == 0 || ones == pred.size();
  r.silhouette = r.degenerate ? 0.0 : silhouette(d, pred, cfg.clamp_negative);
  r.total = r.f1 + r.k * r.silhouette;
  return r;
}

RewardBreakdown curiosity_reward(std::span<const Trajectory> trajs, std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth, const MetricConfig& cfg,
                                 const Executor* executor) {
  return curiosity_reward(pairwise_distances(trajs, cfg, executor), pred, truth, cfg);
}

}  // namespace curio
