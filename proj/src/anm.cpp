#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curio/factors.hpp"
#include "curio/random.hpp"

namespace curio {

namespace {

// Table ranges, in the order the tables list them.
const Interval kG1{-4.5, -1.0};
const Interval kG2{-11.5, -8.0};
const Interval kL1{0.1, 0.28};
const Interval kL2{0.46, 0.64};
const Interval kL3{0.82, 1.0};
const Interval kS1{0.001, 0.2008};
const Interval kS2{0.4006, 0.6004};
const Interval kS3{0.8002, 1.0};

// Maps a gravity range onto an effect range. Stronger gravity (larger |g|) gives a larger
// effect value; the deterministic image fills the middle half of the effect range and the
// uniform noise the remaining margin.
EffectMap map_onto(Factor effect, const Interval& cause, const Interval& target, bool zero_noise) {
  EffectMap m;
  m.effect = effect;
  m.slope = -target.width() / (2.0 * cause.width());
  m.intercept = target.mid() - m.slope * cause.mid();
  m.noise_half_width = zero_noise ? 0.0 : 0.25 * target.width();
  return m;
}

constexpr double kTol = 1e-12;

int range_index(const std::vector<Interval>& ranges, double v) {
  for (std::size_t i = 0; i < ranges.size(); ++i)
    if (ranges[i].contains(v, kTol * std::max(1.0, std::abs(v)))) return static_cast<int>(i);
  return -1;
}

double component_value(const AnmComponent& c, Factor cause, Factor f, double cause_value) {
  if (f == cause) return cause_value;
  for (const EffectMap& m : c.effects)
    if (m.effect == f) return m.center(cause_value);
  throw std::logic_error("cluster target is neither the cause nor an effect");
}

}  // namespace

std::string_view anm_key(AnmScenarioId id) {
  static constexpr std::string_view names[] = {"C1", "C2", "C3", "C4", "C5", "C6"};
  return names[static_cast<std::size_t>(id)];
}

std::optional<AnmScenarioId> parse_anm(std::string_view key) {
  for (AnmScenarioId id : kAllAnmScenarios)
    if (anm_key(id) == key) return id;
  if (key.size() == 2 && (key[0] == 'c') && key[1] >= '1' && key[1] <= '6')
    return static_cast<AnmScenarioId>(key[1] - '1');
  return std::nullopt;
}

const DeclaredRanges& AnmScenario::declared_for(Factor f) const {
  for (const DeclaredRanges& d : declared)
    if (d.factor == f) return d;
  throw std::invalid_argument("scenario declares no ranges for " + std::string(factor_key(f)));
}

AnmScenario anm_scenario(AnmScenarioId id, bool zero_noise) {
  using F = Factor;
  AnmScenario s;
  s.id = id;
  s.cause = F::Gravity;
  auto comp = [&](const Interval& g, std::initializer_list<std::pair<F, Interval>> effects) {
    AnmComponent c{g, {}};
    for (const auto& [f, r] : effects) c.effects.push_back(map_onto(f, g, r, zero_noise));
    return c;
  };
  switch (id) {
    case AnmScenarioId::C1:
    case AnmScenarioId::C2:
      s.components = {comp(kG1, {{F::LateralFriction, kL1}}), comp(kG2, {{F::LateralFriction, kL3}})};
      s.declared = {{F::Gravity, {kG1, kG2}}, {F::LateralFriction, {kL1, kL2, kL3}}};
      s.cluster_target = id == AnmScenarioId::C1 ? std::vector<F>{F::Gravity} : std::vector<F>{F::LateralFriction};
      break;
    case AnmScenarioId::C3:
    case AnmScenarioId::C4:
      s.components = {comp(kG1, {{F::LateralFriction, kL1}, {F::SpinningFriction, kS1}}),
                      comp(kG2, {{F::LateralFriction, kL3}, {F::SpinningFriction, kS3}})};
      s.declared = {{F::Gravity, {kG1, kG2}},
                    {F::LateralFriction, {kL1, kL2, kL3}},
                    {F::SpinningFriction, {kS1, kS2, kS3}}};
      s.cluster_target = id == AnmScenarioId::C3 ? std::vector<F>{F::Gravity}
                                                 : std::vector<F>{F::LateralFriction, F::SpinningFriction};
      break;
    case AnmScenarioId::C5:
      // One gravity mode; the discrete part of the lateral-friction noise selects L1 or L2.
      s.components = {comp(kG1, {{F::LateralFriction, kL1}, {F::SpinningFriction, kS1}}),
                      comp(kG1, {{F::LateralFriction, kL2}, {F::SpinningFriction, kS1}})};
      s.declared = {{F::Gravity, {kG1}}, {F::LateralFriction, {kL1, kL2}}, {F::SpinningFriction, {kS1}}};
      s.cluster_target = {F::LateralFriction};
      break;
    case AnmScenarioId::C6:
      s.components = {comp(kG1, {{F::LateralFriction, kL1}, {F::SpinningFriction, kS1}}),
                      comp(kG1, {{F::LateralFriction, kL1}, {F::SpinningFriction, kS2}})};
      s.declared = {{F::Gravity, {kG1}}, {F::LateralFriction, {kL1}}, {F::SpinningFriction, {kS1, kS2}}};
      s.cluster_target = {F::SpinningFriction};
      break;
  }
  return s;
}

namespace {

// Binary label of one component under the scenario's cluster target.
std::vector<std::uint8_t> component_labels(const AnmScenario& s) {
  std::vector<std::uint8_t> labels(s.components.size(), 0);
  bool first = true;
  for (Factor f : s.cluster_target) {
    const DeclaredRanges& declared = s.declared_for(f);
    std::vector<int> idx;
    for (const AnmComponent& c : s.components) {
      const int i = range_index(declared.ranges, component_value(c, s.cause, f, c.cause_range.mid()));
      if (i < 0) throw std::invalid_argument("component center outside the declared ranges");
      idx.push_back(i);
    }
    std::vector<int> used = idx;
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    if (used.size() != 2)
      throw std::invalid_argument("cluster target " + std::string(factor_key(f)) + " must split into two groups");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto lab = static_cast<std::uint8_t>(idx[k] == used[0] ? 0 : 1);
      if (first)
        labels[k] = lab;
      else if (labels[k] != lab)
        throw std::invalid_argument("cluster target factors disagree on the partition");
    }
    first = false;
  }
  return labels;
}

}  // namespace

std::vector<AnmDraw> sample_anm_draws(const AnmScenario& scenario, int n_envs, std::uint64_t seed) {
  if (n_envs <= 0 || n_envs % 2 != 0) throw std::invalid_argument("n_envs must be positive and even");
  if (scenario.components.empty()) throw std::invalid_argument("scenario has no components");
  const std::vector<std::uint8_t> labels = component_labels(scenario);

  std::vector<std::size_t> per_label[2];
  for (std::size_t c = 0; c < labels.size(); ++c) per_label[labels[c]].push_back(c);
  if (per_label[0].empty() || per_label[1].empty())
    throw std::invalid_argument("scenario must populate both clusters");
  const int half = n_envs / 2;
  for (const auto& group : per_label)
    if (half % static_cast<int>(group.size()) != 0)
      throw std::invalid_argument("n_envs/2 must be divisible by the number of components per cluster");

  Rng cause_rng(derive_seed(seed, 0xa11));
  Rng noise_rng(derive_seed(seed, 0x401));
  std::vector<AnmDraw> draws;
  draws.reserve(static_cast<std::size_t>(n_envs));
  for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
    const auto& group = per_label[label];
    const int count = half / static_cast<int>(group.size());
    for (std::size_t c : group) {
      const AnmComponent& comp = scenario.components[c];
      for (double g : stratified_uniform(cause_rng, comp.cause_range.low, comp.cause_range.high, count)) {
        AnmDraw d;
        d.component = c;
        d.cause = g;
        d.label = label;
        for (const EffectMap& m : comp.effects) {
          const double n = uniform(noise_rng, -m.noise_half_width, m.noise_half_width);
          d.noise.push_back(n);
          d.effects.push_back(m.center(g) + n);
        }
        draws.push_back(std::move(d));
      }
    }
  }
  return draws;
}

EnvironmentBatch sample_anm_batch(const AnmScenario& scenario, int n_envs, std::uint64_t seed) {
  const std::vector<AnmDraw> draws = sample_anm_draws(scenario, n_envs, seed);
  EnvironmentBatch batch;
  batch.primary_factor = scenario.cluster_target.front();
  batch.seed = seed;
  for (const AnmDraw& d : draws) {
    const AnmComponent& comp = scenario.components[d.component];
    FactorAssignment a = FactorAssignment::defaults();
    a[scenario.cause] = d.cause;
    for (std::size_t e = 0; e < comp.effects.size(); ++e) {
      const Factor f = comp.effects[e].effect;
      const double v = d.effects[e];
      if (range_index(scenario.declared_for(f).ranges, v) < 0)
        throw std::runtime_error("sampled " + std::string(factor_key(f)) +
                                 " falls outside the declared ranges; check the effect map");
      a[f] = v;
    }
    // labels follow the cluster target, recomputed from the sampled values
    std::uint8_t label = 0;
    bool first = true;
    for (Factor f : scenario.cluster_target) {
      const DeclaredRanges& declared = scenario.declared_for(f);
      const int idx = range_index(declared.ranges, a[f]);
      if (idx < 0)
        throw std::runtime_error("sampled " + std::string(factor_key(f)) + " falls outside the declared ranges");
      int lowest = idx;
      for (const AnmComponent& c : scenario.components)
        lowest = std::min(lowest, range_index(declared.ranges, component_value(c, scenario.cause, f, c.cause_range.mid())));
      const auto lab = static_cast<std::uint8_t>(idx == lowest ? 0 : 1);
      if (!first && lab != label) throw std::runtime_error("cluster target factors disagree on a sample");
      label = lab;
      first = false;
    }
    if (label != d.label) throw std::logic_error("sampled label differs from its component label");
    batch.specs.push_back(a);
    batch.true_labels.push_back(label);
  }
  return batch;
}

}  // namespace curio
