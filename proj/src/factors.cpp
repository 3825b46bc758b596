#include "curio/factors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curio/random.hpp"

namespace curio {

namespace {

constexpr double kRangeSlack = 1e-12;

double slack_for(double v) { return kRangeSlack * std::max(1.0, std::abs(v)); }

}  // namespace

std::string_view factor_key(Factor f) {
  switch (f) {
    case Factor::Mass: return "mass";
    case Factor::Size: return "size";
    case Factor::LateralFriction: return "lateral_friction";
    case Factor::SpinningFriction: return "spinning_friction";
    case Factor::Gravity: return "gravity";
  }
  return "?";
}

std::string_view factor_label(Factor f) {
  switch (f) {
    case Factor::Mass: return "Mass";
    case Factor::Size: return "Size";
    case Factor::LateralFriction: return "Lat. Frict.";
    case Factor::SpinningFriction: return "Spin. Frict.";
    case Factor::Gravity: return "Gravity";
  }
  return "?";
}

std::optional<Factor> parse_factor(std::string_view key) {
  for (Factor f : kAllFactors)
    if (factor_key(f) == key) return f;
  // a few spellings that show up in hand-written configs
  if (key == "lateral" || key == "lat_friction") return Factor::LateralFriction;
  if (key == "spinning" || key == "spin_friction") return Factor::SpinningFriction;
  return std::nullopt;
}

const std::vector<CausalFactor>& default_factor_table() {
  static const std::vector<CausalFactor> table = {
      {Factor::Mass, 0.25, {0.01, 0.5}},
      {Factor::Size, 0.075, {0.05, 0.1}},
      {Factor::LateralFriction, 1.0, {0.1, 1.0}},
      {Factor::SpinningFriction, 0.001, {0.001, 1.0}},
      {Factor::Gravity, -9.81, {-11.5, -1.0}, true},
  };
  return table;
}

const CausalFactor& factor_info(Factor f) { return default_factor_table()[index_of(f)]; }

FactorRange make_range(Factor f, double low, double high) {
  if (!std::isfinite(low) || !std::isfinite(high))
    throw std::invalid_argument("range endpoints must be finite");
  if (low > high)
    throw std::invalid_argument("range for " + std::string(factor_key(f)) + " has low > high");
  const Interval g = factor_info(f).global_range;
  if (low < g.low - slack_for(g.low) || high > g.high + slack_for(g.high))
    throw std::invalid_argument("range for " + std::string(factor_key(f)) + " leaves the global range");
  return {f, low, high};
}

FactorRange global_range(Factor f) {
  const Interval g = factor_info(f).global_range;
  return {f, g.low, g.high};
}

std::vector<Side> parse_side_path(std::string_view path) {
  std::vector<Side> out;
  for (char c : path) {
    if (c == 'L' || c == 'l')
      out.push_back(Side::L);
    else if (c == 'R' || c == 'r')
      out.push_back(Side::R);
    else
      throw std::invalid_argument("side path may only contain L and R");
  }
  return out;
}

std::string format_side_path(std::span<const Side> path) {
  std::string s;
  for (Side side : path) s.push_back(side == Side::L ? 'L' : 'R');
  return s;
}

RangePair thirds_partition(const FactorRange& range) {
  const double w = range.width();
  if (!(w > 0.0)) throw std::invalid_argument("thirds_partition needs a range of positive width");
  const double a = range.low;
  return {FactorRange{range.factor, a, a + w / 3.0}, FactorRange{range.factor, a + 2.0 * w / 3.0, range.high}};
}

RangePair bipartition_descend(const FactorRange& range, std::span<const Side> side_path) {
  if (side_path.size() > static_cast<std::size_t>(kMaxBipartitionDepth))
    throw std::invalid_argument("bipartition depth is limited to 6");
  FactorRange current = range;
  for (Side side : side_path) {
    const RangePair split = thirds_partition(current);
    current = side == Side::L ? split.low : split.high;
  }
  if (current.width() < 1e-12) throw std::invalid_argument("bipartition produced an empty range");
  return thirds_partition(current);
}

RangePair gap_schedule(const FactorRange& range, int halvings) {
  if (halvings < 0) throw std::invalid_argument("gap halvings must be non-negative");
  if (halvings > kMaxGapHalvings) throw std::invalid_argument("gap halvings are limited to 4");
  if (halvings == 0) return thirds_partition(range);
  const double w = range.width();
  if (!(w > 0.0)) throw std::invalid_argument("gap_schedule needs a range of positive width");
  const double gap = w / (3.0 * std::ldexp(1.0, halvings));
  const double cluster = 0.5 * (w - gap);
  return {FactorRange{range.factor, range.low, range.low + cluster},
          FactorRange{range.factor, range.high - cluster, range.high}};
}

FactorAssignment FactorAssignment::defaults() {
  FactorAssignment a;
  for (const CausalFactor& cf : default_factor_table()) a.values[index_of(cf.id)] = cf.default_value;
  return a;
}

EnvironmentBatch make_bimodal_batch(Factor primary, const FactorRange& low, const FactorRange& high,
                                    int n_envs, std::uint64_t seed) {
  if (n_envs <= 0 || n_envs % 2 != 0) throw std::invalid_argument("n_envs must be positive and even");
  if (low.factor != primary || high.factor != primary)
    throw std::invalid_argument("ranges must belong to the primary factor");
  if (low.interval().overlaps(high.interval())) throw std::invalid_argument("bimodal ranges overlap");

  Rng rng(derive_seed(seed, 0x0b1));
  EnvironmentBatch batch;
  batch.primary_factor = primary;
  batch.seed = seed;
  const int half = n_envs / 2;
  for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
    const FactorRange& r = label == 0 ? low : high;
    for (double v : stratified_uniform(rng, r.low, r.high, half)) {
      FactorAssignment a = FactorAssignment::defaults();
      a[primary] = v;
      batch.specs.push_back(a);
      batch.true_labels.push_back(label);
    }
  }
  return batch;
}

bool is_excluded_pair(Factor primary, Factor secondary) {
  return (primary == Factor::Mass && secondary == Factor::Gravity) ||
         (primary == Factor::Gravity && secondary == Factor::Mass);
}

EnvironmentBatch make_two_factor_batch(Factor primary, Factor secondary, const RangePair& primary_ranges,
                                       const RangePair& secondary_ranges, int n_envs, std::uint64_t seed) {
  if (primary == secondary) throw std::invalid_argument("primary and secondary factor must differ");
  if (is_excluded_pair(primary, secondary))
    throw std::invalid_argument("mass and gravity cannot be paired: their effects counteract");
  if (n_envs <= 0 || n_envs % 4 != 0) throw std::invalid_argument("n_envs must be a positive multiple of 4");
  if (primary_ranges.low.factor != primary || primary_ranges.high.factor != primary ||
      secondary_ranges.low.factor != secondary || secondary_ranges.high.factor != secondary)
    throw std::invalid_argument("range factors do not match the requested pair");
  if (primary_ranges.low.interval().overlaps(primary_ranges.high.interval()) ||
      secondary_ranges.low.interval().overlaps(secondary_ranges.high.interval()))
    throw std::invalid_argument("bimodal ranges overlap");

  const int half = n_envs / 2;
  const int quarter = n_envs / 4;

  // Position pattern of secondary low/high values, shared by both primary groups.
  std::vector<std::uint8_t> pattern(static_cast<std::size_t>(half), 0);
  std::fill(pattern.begin() + quarter, pattern.end(), std::uint8_t{1});
  Rng pattern_rng(derive_seed(seed, 0x7a7));
  std::shuffle(pattern.begin(), pattern.end(), pattern_rng);

  Rng rng(derive_seed(seed, 0x0b1));
  EnvironmentBatch batch;
  batch.primary_factor = primary;
  batch.seed = seed;
  for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
    const FactorRange& pr = label == 0 ? primary_ranges.low : primary_ranges.high;
    const std::vector<double> pv = stratified_uniform(rng, pr.low, pr.high, half);
    const std::vector<double> s_low =
        stratified_uniform(rng, secondary_ranges.low.low, secondary_ranges.low.high, quarter);
    const std::vector<double> s_high =
        stratified_uniform(rng, secondary_ranges.high.low, secondary_ranges.high.high, quarter);
    std::size_t next_low = 0, next_high = 0;
    for (int i = 0; i < half; ++i) {
      FactorAssignment a = FactorAssignment::defaults();
      a[primary] = pv[static_cast<std::size_t>(i)];
      a[secondary] = pattern[static_cast<std::size_t>(i)] == 0 ? s_low[next_low++] : s_high[next_high++];
      batch.specs.push_back(a);
      batch.true_labels.push_back(label);
    }
  }
  return batch;
}

}  // namespace curio
