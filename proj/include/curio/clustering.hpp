#pragma once

// Two-medoid trajectory clustering with out-of-sample assignment.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "curio/metrics.hpp"

namespace curio {

struct ClusterModel {
  std::array<std::size_t, 2> medoid_indices{0, 0};
  std::array<Trajectory, 2> medoid_trajectories;
  MetricConfig metric;
  Labels training_labels;
  // every trajectory identical, or the fit left a cluster empty
  bool degenerate = false;
  int sweeps = 0;
};

inline constexpr int kMaxMedoidSweeps = 100;

/// PAM-style fit on a precomputed distance matrix. Starts from the farthest pair, then
/// alternates nearest-medoid assignment (ties to cluster 0) and medoid updates (ties to
/// the lowest index).
ClusterModel fit_two_medoids(const DistanceMatrix& d, std::span<const Trajectory> trajs, const MetricConfig& metric);
ClusterModel fit_two_medoids(std::span<const Trajectory> trajs, const MetricConfig& metric, std::uint64_t seed,
                             const Executor* executor = nullptr);

/// Nearer medoid; ties go to cluster 0.
std::uint8_t assign(const ClusterModel& model, const Trajectory& traj);
Labels assign_all(const ClusterModel& model, std::span<const Trajectory> trajs, const Executor* executor = nullptr);

}  // namespace curio
