#include "curio/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "curio/parallel.hpp"

namespace curio {

Plan::Plan(int horizon_, std::vector<double> values) : horizon(horizon_), controls(std::move(values)) {
  if (horizon_ <= 0 || controls.size() != static_cast<std::size_t>(horizon_ * kPlanDof))
    throw std::invalid_argument("plan size does not match horizon x dof");
}

void Plan::validate() const {
  if (horizon <= 0) throw std::invalid_argument("plan horizon must be positive");
  if (controls.size() != static_cast<std::size_t>(horizon * kPlanDof))
    throw std::invalid_argument("plan size does not match horizon x dof");
  for (double c : controls)
    if (!(c >= -1.0 && c <= 1.0)) throw std::invalid_argument("plan controls must lie in [-1, 1]");
}

void SimConfig::validate(int horizon) const {
  if (frames <= 0) throw std::invalid_argument("frames must be positive");
  if (horizon <= 0 || frames % horizon != 0)
    throw std::invalid_argument("frames must be divisible by the plan horizon");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (substeps < 1) throw std::invalid_argument("substeps must be at least 1");
  if (!(contact_stiffness >= 0.0) || !(contact_damping >= 0.0))
    throw std::invalid_argument("contact stiffness and damping must be non-negative");
  if (!(pusher_speed_scale >= 0.0)) throw std::invalid_argument("pusher speed scale must be non-negative");
}

bool SimState::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) && std::isfinite(vx) &&
         std::isfinite(vy) && std::isfinite(omega) && std::isfinite(px) && std::isfinite(py);
}

Trajectory Trajectory::from_rows(const std::vector<std::vector<double>>& rows, double frame_dt) {
  if (rows.empty()) throw std::invalid_argument("trajectory needs at least one row");
  Trajectory t(rows.size(), rows.front().size(), frame_dt);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != t.dim) throw std::invalid_argument("ragged trajectory rows");
    std::copy(rows[i].begin(), rows[i].end(), t.samples.begin() + static_cast<std::ptrdiff_t>(i * t.dim));
  }
  return t;
}

PusherBlockSim::PusherBlockSim(const FactorAssignment& assignment, const SimConfig& config)
    : factors_(assignment),
      config_(config),
      trajectory_(static_cast<std::size_t>(config.frames), static_cast<std::size_t>(config.observation_dim()),
                  config.dt) {
  if (!(assignment.mass() > 0.0) || !(assignment.size() > 0.0))
    throw std::invalid_argument("mass and size must be positive");
  state_.px = config.pusher_start[0];
  state_.py = config.pusher_start[1];
  const double s = assignment.size();
  inertia_ = (2.0 / 3.0) * assignment.mass() * s * s;
}

namespace {

// Coulomb deceleration `decel` applied over a step of length h to a velocity that has
// already received the step's applied impulse. Returns the displacement scale so that
// position advances by the exact distance of a constant-deceleration slide.
struct FrictionStep {
  double keep;      // factor applied to the velocity
  double distance;  // displacement along the pre-friction velocity direction, per unit velocity
};

FrictionStep coulomb(double speed, double decel, double h) {
  if (speed <= 0.0) return {0.0, 0.0};
  const double dv = decel * h;
  if (speed > dv) {
    const double keep = 1.0 - dv / speed;
    return {keep, 0.5 * (1.0 + keep) * h};
  }
  // comes to rest inside the step
  const double t_stop = speed / decel;
  return {0.0, 0.5 * t_stop};
}

}  // namespace

void PusherBlockSim::substep(double ux, double uy, double h) {
  SimState& s = state_;
  s.px += ux * h;
  s.py += uy * h;

  const double half = factors_.size();
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double rx = s.px - s.x;
  const double ry = s.py - s.y;
  // pusher position in the block frame
  const double lx = c * rx + sn * ry;
  const double ly = -sn * rx + c * ry;

  double fx = 0.0, fy = 0.0, torque = 0.0;
  if (std::abs(lx) < half && std::abs(ly) < half) {
    const double pen_x = half - std::abs(lx);
    const double pen_y = half - std::abs(ly);
    double nlx = 0.0, nly = 0.0, depth = 0.0;
    if (pen_x <= pen_y) {
      nlx = lx >= 0.0 ? 1.0 : -1.0;
      depth = pen_x;
    } else {
      nly = ly >= 0.0 ? 1.0 : -1.0;
      depth = pen_y;
    }
    // outward face normal in the world frame
    const double nx = c * nlx - sn * nly;
    const double ny = sn * nlx + c * nly;
    // velocity of the block material point under the pusher
    const double bvx = s.vx - s.omega * ry;
    const double bvy = s.vy + s.omega * rx;
    const double depth_rate = -((ux - bvx) * nx + (uy - bvy) * ny);
    const double magnitude =
        std::max(0.0, config_.contact_stiffness * depth + config_.contact_damping * depth_rate);
    fx = -magnitude * nx;
    fy = -magnitude * ny;
    torque = rx * fy - ry * fx;
  }

  const double g = std::abs(factors_.gravity());
  const double m = factors_.mass();
  const double vx = s.vx + fx / m * h;
  const double vy = s.vy + fy / m * h;
  const double w = s.omega + torque / inertia_ * h;

  const double speed = std::hypot(vx, vy);
  const FrictionStep lin = coulomb(speed, factors_.lateral_friction() * g, h);
  s.x += vx * lin.distance;
  s.y += vy * lin.distance;
  s.vx = vx * lin.keep;
  s.vy = vy * lin.keep;

  const double spin_decel = factors_.spinning_friction() * g * config_.spin_coefficient / half;
  const FrictionStep rot = coulomb(std::abs(w), spin_decel, h);
  s.theta += w * rot.distance;
  s.omega = w * rot.keep;
}

void PusherBlockSim::record() {
  const std::size_t i = static_cast<std::size_t>(frame_);
  trajectory_.at(i, 0) = state_.x;
  trajectory_.at(i, 1) = state_.y;
  if (trajectory_.dim == 3) trajectory_.at(i, 2) = state_.theta;
}

void PusherBlockSim::advance(std::array<double, 2> command, int frames) {
  if (frame_ + frames > config_.frames) throw std::invalid_argument("advance past the episode length");
  const double ux = std::clamp(command[0], -1.0, 1.0) * config_.pusher_speed_scale;
  const double uy = std::clamp(command[1], -1.0, 1.0) * config_.pusher_speed_scale;
  const double h = config_.dt / config_.substeps;
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < config_.substeps; ++k) substep(ux, uy, h);
    if (!state_.finite())
      throw SimulationError("non-finite simulator state at frame " + std::to_string(frame_) +
                            "; contact stiffness too high for the step size");
    record();
    ++frame_;
  }
}

Trajectory rollout(const FactorAssignment& assignment, const Plan& plan, const SimConfig& config) {
  plan.validate();
  config.validate(plan.horizon);
  PusherBlockSim sim(assignment, config);
  const int segment = config.frames / plan.horizon;
  for (int t = 0; t < plan.horizon; ++t) sim.advance({plan.at(t, 0), plan.at(t, 1)}, segment);
  return sim.take_trajectory();
}

std::vector<Trajectory> rollout_batch(const EnvironmentBatch& batch, const Plan& plan, const SimConfig& config,
                                      const Executor* executor) {
  if (batch.specs.empty()) throw std::invalid_argument("rollout_batch needs a non-empty batch");
  plan.validate();
  config.validate(plan.horizon);
  std::vector<Trajectory> out(batch.specs.size());
  for_each_index(executor, batch.specs.size(), [&](std::size_t i) { out[i] = rollout(batch.specs[i], plan, config); });
  return out;
}

void dump_trajectories(const std::string& dir, std::span<const Trajectory> trajectories) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto path = std::filesystem::path(dir) / ("env_" + std::to_string(i) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const Trajectory& t = trajectories[i];
    out << "frame,x,y,theta\n";
    char buf[128];
    for (std::size_t f = 0; f < t.frames; ++f) {
      const double theta = t.dim >= 3 ? t.at(f, 2) : 0.0;
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", f, t.at(f, 0), t.at(f, 1), theta);
      out << buf;
    }
  }
}

}  // namespace curio
