#pragma once

// Causal factors, range schedules and environment batches.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curio {

enum class Factor : std::uint8_t { Mass, Size, LateralFriction, SpinningFriction, Gravity };

inline constexpr std::size_t kFactorCount = 5;
inline constexpr std::array<Factor, kFactorCount> kAllFactors = {
    Factor::Mass, Factor::Size, Factor::LateralFriction, Factor::SpinningFriction, Factor::Gravity};

constexpr std::size_t index_of(Factor f) { return static_cast<std::size_t>(f); }

/// Machine name used in config files ("mass", "lateral_friction", ...).
std::string_view factor_key(Factor f);
/// Short human label used in report tables ("Lat. Frict.").
std::string_view factor_label(Factor f);
std::optional<Factor> parse_factor(std::string_view key);

/// Closed interval, always stored min-first.
struct Interval {
  double low = 0.0;
  double high = 0.0;

  double width() const { return high - low; }
  double mid() const { return 0.5 * (low + high); }
  bool contains(double x, double tol = 0.0) const { return x >= low - tol && x <= high + tol; }
  bool overlaps(const Interval& o) const { return low <= o.high && o.low <= high; }
  bool operator==(const Interval&) const = default;
};

struct CausalFactor {
  Factor id;
  double default_value;
  Interval global_range;
  // The published tables list this factor's range high-to-low (gravity: -1.0 .. -11.5).
  bool listed_descending = false;
};

/// The five factors with their default values and exploration ranges.
const std::vector<CausalFactor>& default_factor_table();
const CausalFactor& factor_info(Factor f);

struct FactorRange {
  Factor factor = Factor::Mass;
  double low = 0.0;
  double high = 0.0;

  Interval interval() const { return {low, high}; }
  double width() const { return high - low; }
  bool operator==(const FactorRange&) const = default;
};

/// Validates low <= high and containment in the factor's global range.
FactorRange make_range(Factor f, double low, double high);
FactorRange global_range(Factor f);

struct RangePair {
  FactorRange low;
  FactorRange high;
  bool operator==(const RangePair&) const = default;
};

enum class Side : std::uint8_t { L, R };
std::vector<Side> parse_side_path(std::string_view path);
std::string format_side_path(std::span<const Side> path);

/// Splits a range into equal thirds and keeps the outer two; the middle third is the gap.
RangePair thirds_partition(const FactorRange& range);

/// Recursive thirds split following `side_path` (L = lower sub-range) then a final split.
RangePair bipartition_descend(const FactorRange& range, std::span<const Side> side_path);

/// Centered gap of width W/(3*2^halvings) with both clusters flush to the range ends.
RangePair gap_schedule(const FactorRange& range, int halvings);

inline constexpr int kMaxBipartitionDepth = 6;
inline constexpr int kMaxGapHalvings = 4;

/// One value per causal factor; unvaried factors keep their defaults.
struct FactorAssignment {
  std::array<double, kFactorCount> values{};

  static FactorAssignment defaults();
  double operator[](Factor f) const { return values[index_of(f)]; }
  double& operator[](Factor f) { return values[index_of(f)]; }
  double mass() const { return (*this)[Factor::Mass]; }
  double size() const { return (*this)[Factor::Size]; }
  double lateral_friction() const { return (*this)[Factor::LateralFriction]; }
  double spinning_friction() const { return (*this)[Factor::SpinningFriction]; }
  double gravity() const { return (*this)[Factor::Gravity]; }
  bool operator==(const FactorAssignment&) const = default;
};

struct EnvironmentBatch {
  std::vector<FactorAssignment> specs;
  std::vector<std::uint8_t> true_labels;
  Factor primary_factor = Factor::Mass;
  std::uint64_t seed = 0;

  std::size_t size() const { return specs.size(); }
  bool operator==(const EnvironmentBatch&) const = default;
};

/// Half the environments draw the primary factor from `low` (label 0), half from `high` (label 1).
EnvironmentBatch make_bimodal_batch(Factor primary, const FactorRange& low, const FactorRange& high,
                                    int n_envs, std::uint64_t seed);

/// Labels follow `primary`; the secondary factor is split half/half inside each label group
/// with one shared low/high position pattern.
EnvironmentBatch make_two_factor_batch(Factor primary, Factor secondary, const RangePair& primary_ranges,
                                       const RangePair& secondary_ranges, int n_envs, std::uint64_t seed);

bool is_excluded_pair(Factor primary, Factor secondary);

// ---------------------------------------------------------------------------
// Additive-noise scenarios: effect = slope * cause + intercept + N, N ~ U[-w, w].

enum class AnmScenarioId : std::uint8_t { C1, C2, C3, C4, C5, C6 };
inline constexpr std::array<AnmScenarioId, 6> kAllAnmScenarios = {
    AnmScenarioId::C1, AnmScenarioId::C2, AnmScenarioId::C3,
    AnmScenarioId::C4, AnmScenarioId::C5, AnmScenarioId::C6};
std::string_view anm_key(AnmScenarioId id);
std::optional<AnmScenarioId> parse_anm(std::string_view key);

struct EffectMap {
  Factor effect = Factor::LateralFriction;
  double slope = 0.0;
  double intercept = 0.0;
  double noise_half_width = 0.0;

  double center(double cause) const { return slope * cause + intercept; }
};

/// One block of the cause/effect grid: a cause range and the mechanism active inside it.
struct AnmComponent {
  Interval cause_range;
  std::vector<EffectMap> effects;
};

struct DeclaredRanges {
  Factor factor = Factor::Gravity;
  std::vector<Interval> ranges;  // in table order
};

struct AnmScenario {
  AnmScenarioId id = AnmScenarioId::C1;
  Factor cause = Factor::Gravity;
  std::vector<AnmComponent> components;
  std::vector<Factor> cluster_target;  // all listed factors must induce the same partition
  std::vector<DeclaredRanges> declared;

  const DeclaredRanges& declared_for(Factor f) const;
};

/// Built-in C1..C6 fixtures. `zero_noise` drops the continuous noise term.
AnmScenario anm_scenario(AnmScenarioId id, bool zero_noise = false);

struct AnmDraw {
  std::size_t component = 0;
  double cause = 0.0;
  std::vector<double> effects;
  std::vector<double> noise;
  std::uint8_t label = 0;
};

/// Raw draws (cause, noise, effect) behind a batch; exposed for independence checks.
std::vector<AnmDraw> sample_anm_draws(const AnmScenario& scenario, int n_envs, std::uint64_t seed);

EnvironmentBatch sample_anm_batch(const AnmScenario& scenario, int n_envs, std::uint64_t seed);

}  // namespace curio
