#pragma once

// Planar pusher/block simulator. A kinematic point pusher follows an open-loop velocity
// plan and pushes a square block through a spring-damper contact; the block slides with
// Coulomb lateral friction and spins against a spinning-friction torque.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "curio/factors.hpp"

namespace curio {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kPlanDof = 2;

/// horizon x dof controls in [-1, 1], row-major; row t drives the t-th equal time segment.
struct Plan {
  int horizon = 6;
  std::vector<double> controls;

  Plan() = default;
  explicit Plan(int horizon_, double fill = 0.0)
      : horizon(horizon_), controls(static_cast<std::size_t>(horizon_ * kPlanDof), fill) {}
  Plan(int horizon_, std::vector<double> values);

  double at(int t, int d) const { return controls[static_cast<std::size_t>(t * kPlanDof + d)]; }
  double& at(int t, int d) { return controls[static_cast<std::size_t>(t * kPlanDof + d)]; }
  std::size_t size() const { return controls.size(); }
  void validate() const;
  bool operator==(const Plan&) const = default;
};

enum class ObservationMode { Pose, Position };

struct SimConfig {
  int frames = 198;
  double dt = 0.01;
  // integration sub-steps per observed frame; keeps the stiff contact of light blocks stable
  int substeps = 10;
  double pusher_speed_scale = 0.3;
  double contact_stiffness = 500.0;
  double contact_damping = 5.0;
  std::array<double, 2> pusher_start{-0.15, 0.0};
  double spin_coefficient = 1.0;
  ObservationMode observation = ObservationMode::Pose;

  void validate(int horizon) const;
  int observation_dim() const { return observation == ObservationMode::Pose ? 3 : 2; }
};

struct SimState {
  double x = 0.0, y = 0.0, theta = 0.0;
  double vx = 0.0, vy = 0.0, omega = 0.0;
  double px = 0.0, py = 0.0;

  bool finite() const;
};

/// frames x dim samples of the block pose, row-major.
struct Trajectory {
  std::size_t frames = 0;
  std::size_t dim = 3;
  double frame_dt = 0.01;
  std::vector<double> samples;

  Trajectory() = default;
  Trajectory(std::size_t frames_, std::size_t dim_, double frame_dt_ = 0.01)
      : frames(frames_), dim(dim_), frame_dt(frame_dt_), samples(frames_ * dim_, 0.0) {}
  /// Builds a trajectory from explicit rows (tests, fixtures).
  static Trajectory from_rows(const std::vector<std::vector<double>>& rows, double frame_dt = 0.01);

  std::span<const double> row(std::size_t i) const { return {samples.data() + i * dim, dim}; }
  double& at(std::size_t i, std::size_t d) { return samples[i * dim + d]; }
  double at(std::size_t i, std::size_t d) const { return samples[i * dim + d]; }
  bool operator==(const Trajectory&) const = default;
};

/// Stepwise interface to one environment; `rollout` and the closed-loop planner share it.
class PusherBlockSim {
 public:
  PusherBlockSim(const FactorAssignment& assignment, const SimConfig& config);

  /// Drives the pusher with a constant command for `frames` frames, recording each frame.
  void advance(std::array<double, 2> command, int frames);

  const SimState& state() const { return state_; }
  /// Overrides the current state, e.g. to launch the block with a given velocity.
  void set_state(const SimState& s) { state_ = s; }
  int frames_recorded() const { return frame_; }
  const Trajectory& trajectory() const { return trajectory_; }
  Trajectory take_trajectory() { return std::move(trajectory_); }

 private:
  void substep(double ux, double uy, double h);
  void record();

  FactorAssignment factors_;
  SimConfig config_;
  SimState state_;
  Trajectory trajectory_;
  int frame_ = 0;
  double inertia_ = 0.0;
};

Trajectory rollout(const FactorAssignment& assignment, const Plan& plan, const SimConfig& config);

class Executor;
std::vector<Trajectory> rollout_batch(const EnvironmentBatch& batch, const Plan& plan, const SimConfig& config,
                                      const Executor* executor = nullptr);

/// Writes env_{index}.csv with header frame,x,y,theta into `dir`.
void dump_trajectories(const std::string& dir, std::span<const Trajectory> trajectories);

}  // namespace curio
