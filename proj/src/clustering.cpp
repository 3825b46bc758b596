#include "curio/clustering.hpp"

#include <algorithm>
#include <stdexcept>

#include "curio/parallel.hpp"

namespace curio {

namespace {

Labels nearest_medoid(const DistanceMatrix& d, std::array<std::size_t, 2> m) {
  Labels labels(d.n, 0);
  for (std::size_t i = 0; i < d.n; ++i) labels[i] = d(i, m[1]) < d(i, m[0]) ? 1 : 0;
  return labels;
}

}  // namespace

ClusterModel fit_two_medoids(const DistanceMatrix& d, std::span<const Trajectory> trajs, const MetricConfig& metric) {
  const std::size_t n = d.n;
  if (n < 4) throw std::invalid_argument("fit_two_medoids needs at least four trajectories");
  if (trajs.size() != n) throw std::invalid_argument("fit_two_medoids: trajectory count does not match the matrix");

  ClusterModel model;
  model.metric = metric;
  const bool all_same = std::all_of(trajs.begin() + 1, trajs.end(), [&](const Trajectory& t) { return t == trajs[0]; });
  if (all_same) {
    model.training_labels.assign(n, 0);
    model.degenerate = true;
    model.medoid_trajectories = {trajs[0], trajs[0]};
    return model;
  }

  std::array<std::size_t, 2> m{0, 1};
  double best = d(0, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d(i, j) > best) {
        best = d(i, j);
        m = {i, j};
      }

  Labels labels = nearest_medoid(d, m);
  int sweeps = 0;
  while (sweeps < kMaxMedoidSweeps) {
    ++sweeps;
    std::array<std::size_t, 2> next = m;
    for (std::uint8_t c = 0; c < 2; ++c) {
      double best_cost = 0.0;
      bool found = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != c) continue;
        double cost = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          if (labels[j] == c) cost += d(i, j);
        if (!found || cost < best_cost) {
          best_cost = cost;
          next[c] = i;
          found = true;
        }
      }
    }
    if (next == m) break;
    m = next;
    labels = nearest_medoid(d, m);
  }

  model.medoid_indices = m;
  model.medoid_trajectories = {trajs[m[0]], trajs[m[1]]};
  model.training_labels = std::move(labels);
  model.sweeps = sweeps;
  const auto ones = std::count(model.training_labels.begin(), model.training_labels.end(), std::uint8_t{1});
  model.degenerate = ones == 0 || static_cast<std::size_t>(ones) == n;
  return model;
}

ClusterModel fit_two_medoids(std::span<const Trajectory> trajs, const MetricConfig& metric, std::uint64_t /*seed*/,
                             const Executor* executor) {
  if (trajs.size() < 4) throw std::invalid_argument("fit_two_medoids needs at least four trajectories");
  return fit_two_medoids(pairwise_distances(trajs, metric, executor), trajs, metric);
}

std::uint8_t assign(const ClusterModel& model, const Trajectory& traj) {
  const Trajectory& m0 = model.medoid_trajectories[0];
  if (traj.dim != m0.dim) throw std::invalid_argument("assign: trajectory dimension mismatch");
  if (model.degenerate && model.medoid_indices[0] == model.medoid_indices[1]) return 0;
  const double d0 = trajectory_distance(traj, m0, model.metric);
  const double d1 = trajectory_distance(traj, model.medoid_trajectories[1], model.metric);
  return d1 < d0 ? 1 : 0;
}

Labels assign_all(const ClusterModel& model, std::span<const Trajectory> trajs, const Executor* executor) {
  Labels out(trajs.size(), 0);
  for_each_index(executor, trajs.size(), [&](std::size_t i) { out[i] = assign(model, trajs[i]); });
  return out;
}

}  // namespace curio
