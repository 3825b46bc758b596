#pragma once

// Trajectory distances, clustering scores and the curiosity reward.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "curio/sim.hpp"

namespace curio {

class Executor;

enum class DistanceKind : std::uint8_t {
  // s(a,b) - (s(a,a) + s(b,b)) / 2; zero on identical inputs, nonnegative
  Divergence,
  // plain soft-DTW value, may be negative for gamma > 0
  Raw,
};

struct MetricConfig {
  double gamma = 0.1;
  // metres per radian; makes the yaw column commensurate with positions
  double theta_weight = 0.075;
  DistanceKind kind = DistanceKind::Divergence;
  // clamp negative distances to 0 before silhouette
  bool clamp_negative = true;
  double k = 0.1;

  void validate() const;
};

/// Per-column frame-cost weights: 1 for positions, theta_weight^2 for the yaw column.
std::vector<double> frame_weights(std::size_t dim, double theta_weight);

/// Soft-DTW with squared-Euclidean frame cost. Empty `weights` means unit weights.
double soft_dtw(const Trajectory& a, const Trajectory& b, double gamma, std::span<const double> weights = {});

/// Distance between two trajectories under `cfg`.
double trajectory_distance(const Trajectory& a, const Trajectory& b, const MetricConfig& cfg);

struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n
  double gamma = 0.0;
  DistanceKind kind = DistanceKind::Divergence;
  // soft-DTW evaluations spent on distinct (i, j) pairs, and on self-alignments
  std::size_t pair_evaluations = 0;
  std::size_t self_evaluations = 0;

  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n_) : n(n_), values(n_ * n_, 0.0) {}
  static DistanceMatrix from_values(std::size_t n, std::vector<double> values);

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

DistanceMatrix pairwise_distances(std::span<const Trajectory> trajs, const MetricConfig& cfg,
                                  const Executor* executor = nullptr);
/// Raw soft-DTW matrix with unit weights.
DistanceMatrix pairwise_distances(std::span<const Trajectory> trajs, double gamma);

using Labels = std::vector<std::uint8_t>;

/// Mean silhouette over all points for a two-cluster labelling.
double silhouette(const DistanceMatrix& d, std::span<const std::uint8_t> labels, bool clamp_negative = true);

/// Macro F1 under the better of the two cluster-to-class matchings.
double f1_matched(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

struct RewardBreakdown {
  double f1 = 0.0;
  double silhouette = 0.0;
  double k = 0.1;
  double total = 0.0;
  // predicted labels put every point in one cluster; silhouette set to 0
  bool degenerate = false;
};

/// Scores a predicted partition. A partition with an empty cluster gets silhouette 0.
RewardBreakdown curiosity_reward(const DistanceMatrix& d, std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth, const MetricConfig& cfg);
RewardBreakdown curiosity_reward(std::span<const Trajectory> trajs, std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth, const MetricConfig& cfg,
                                 const Executor* executor = nullptr);

}  // namespace curio
