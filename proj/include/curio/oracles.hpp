#pragma once

// Independent reference computations and the fixture suite behind `curio validate`.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curio/metrics.hpp"
#include "curio/planners.hpp"
#include "curio/sim.hpp"

namespace curio {

/// Soft-min over every monotone alignment path, enumerated explicitly. Exponential in the
/// lengths; meant for series of at most ~8 frames.
double soft_dtw_brute_force(const Trajectory& a, const Trajectory& b, double gamma, std::span<const double> weights);

/// Per-point silhouette straight from its definition, no shared code with `silhouette`.
double silhouette_direct(const std::vector<std::vector<double>>& d, const std::vector<std::uint8_t>& labels);

/// Distance the block slides from speed v0 with the pusher out of reach.
double simulated_stopping_distance(double v0, double mu, double gravity);
inline double analytic_stopping_distance(double v0, double mu, double gravity) {
  return v0 * v0 / (2.0 * mu * (gravity < 0 ? -gravity : gravity));
}

/// -sum (x - optimum)^2 over all plan coordinates.
PlanObjective quadratic_objective(const std::vector<double>& optimum);
std::vector<double> quadratic_optimum(int horizon, std::uint64_t seed);
/// Synthetic-objective settings: the search defaults with a finer variance floor.
CemConfig quadratic_cem_config();

struct OracleCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;  // worst error observed
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

OracleCheck check_soft_dtw(std::uint64_t seed = 0, int pairs = 200);
OracleCheck check_silhouette(std::uint64_t seed = 0, int fixtures = 25);
OracleCheck check_stopping_distance();
OracleCheck check_cem_quadratic(std::uint64_t seed = 0);
OracleCheck check_ppo_gradient(std::uint64_t seed = 0);

std::vector<OracleCheck> run_oracle_suite();

}  // namespace curio
