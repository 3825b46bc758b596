#include "curio/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "curio/parallel.hpp"
#include "curio/random.hpp"

namespace curio {

using nlohmann::json;

std::string_view planner_key(PlannerKind p) { return p == PlannerKind::Cem ? "cem" : "ppo"; }

std::optional<PlannerKind> parse_planner(std::string_view key) {
  if (key == "cem") return PlannerKind::Cem;
  if (key == "ppo") return PlannerKind::Ppo;
  return std::nullopt;
}

std::string_view scenario_key(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::FullRange: return "full_range";
    case ScenarioKind::Bipartition: return "bipartition";
    case ScenarioKind::Gap: return "gap";
    case ScenarioKind::TwoFactor: return "two_factor";
    case ScenarioKind::Anm: return "anm";
    case ScenarioKind::Explicit: return "explicit";
  }
  return "?";
}

namespace {

std::optional<ScenarioKind> parse_scenario_kind(std::string_view key) {
  for (auto k : {ScenarioKind::FullRange, ScenarioKind::Bipartition, ScenarioKind::Gap, ScenarioKind::TwoFactor,
                 ScenarioKind::Anm, ScenarioKind::Explicit})
    if (scenario_key(k) == key) return k;
  return std::nullopt;
}

// ---- JSON field readers; every error names the offending field

[[noreturn]] void fail(const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(where.empty() ? key : where + "." + key, "unknown field");
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

template <class T>
void read_number(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) fail(path_of(where, key), "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned() || v.get<long long>() >= 0) {
        out = v.get<T>();
        return;
      }
      fail(path_of(where, key), "expected a non-negative integer");
    } else {
      out = v.get<T>();
    }
  } else {
    if (!v.is_number()) fail(path_of(where, key), "expected a number");
    out = v.get<T>();
  }
}

void read_bool(const json& obj, const std::string& where, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) fail(path_of(where, key), "expected true or false");
  out = obj.at(key).get<bool>();
}

std::string read_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

Factor read_factor(const json& v, const std::string& field) {
  const auto f = parse_factor(read_string(v, field));
  if (!f) fail(field, "unknown factor '" + v.get<std::string>() + "'");
  return *f;
}

RangePair read_ranges(const json& v, Factor f, const std::string& field) {
  if (!v.is_array() || v.size() != 2) fail(field, "expected two ranges [[lo, hi], [lo, hi]]");
  std::array<FactorRange, 2> r;
  for (std::size_t i = 0; i < 2; ++i) {
    const json& p = v.at(i);
    if (!p.is_array() || p.size() != 2 || !p.at(0).is_number() || !p.at(1).is_number())
      fail(field + "[" + std::to_string(i) + "]", "expected [lo, hi]");
    double a = p.at(0).get<double>(), b = p.at(1).get<double>();
    if (a > b) std::swap(a, b);  // ranges may be written in descending (published) order
    try {
      r[i] = make_range(f, a, b);
    } catch (const std::exception& e) {
      fail(field + "[" + std::to_string(i) + "]", e.what());
    }
  }
  if (r[0].low > r[1].low) std::swap(r[0], r[1]);
  if (r[0].interval().overlaps(r[1].interval())) fail(field, "ranges overlap");
  return {r[0], r[1]};
}

void read_sim(const json& obj, SimConfig& s) {
  const std::string w = "sim";
  check_keys(obj, w,
             {"frames", "dt", "substeps", "pusher_speed_scale", "contact_stiffness", "contact_damping", "pusher_start",
              "spin_coefficient", "observation"});
  read_number(obj, w, "frames", s.frames);
  read_number(obj, w, "dt", s.dt);
  read_number(obj, w, "substeps", s.substeps);
  read_number(obj, w, "pusher_speed_scale", s.pusher_speed_scale);
  read_number(obj, w, "contact_stiffness", s.contact_stiffness);
  read_number(obj, w, "contact_damping", s.contact_damping);
  read_number(obj, w, "spin_coefficient", s.spin_coefficient);
  if (obj.contains("pusher_start")) {
    const json& p = obj.at("pusher_start");
    if (!p.is_array() || p.size() != 2 || !p.at(0).is_number() || !p.at(1).is_number())
      fail("sim.pusher_start", "expected [x, y]");
    s.pusher_start = {p.at(0).get<double>(), p.at(1).get<double>()};
  }
  if (obj.contains("observation")) {
    const std::string o = read_string(obj.at("observation"), "sim.observation");
    if (o == "pose") s.observation = ObservationMode::Pose;
    else if (o == "position") s.observation = ObservationMode::Position;
    else fail("sim.observation", "expected 'pose' or 'position'");
  }
}

void read_cem(const json& obj, CemConfig& c) {
  const std::string w = "cem";
  check_keys(obj, w,
             {"plans_per_iter", "iterations", "elite_ratio", "horizon", "init_std", "min_std", "extra_std_start",
              "extra_std_end", "keep_elites"});
  read_number(obj, w, "plans_per_iter", c.plans_per_iter);
  read_number(obj, w, "iterations", c.iterations);
  read_number(obj, w, "elite_ratio", c.elite_ratio);
  read_number(obj, w, "horizon", c.horizon);
  read_number(obj, w, "init_std", c.init_std);
  read_number(obj, w, "min_std", c.min_std);
  read_number(obj, w, "extra_std_start", c.extra_std_start);
  read_number(obj, w, "extra_std_end", c.extra_std_end);
  read_bool(obj, w, "keep_elites", c.keep_elites);
}

void read_ppo(const json& obj, PpoConfig& c) {
  const std::string w = "ppo";
  check_keys(obj, w,
             {"gamma_discount", "entropy_coef", "learning_rate", "vf_coef", "max_grad_norm", "n_epochs", "iterations",
              "hidden_sizes", "clip_range", "gae_lambda", "minibatch_size", "horizon", "eval_every",
              "mean_observation"});
  read_number(obj, w, "gamma_discount", c.gamma_discount);
  read_number(obj, w, "entropy_coef", c.entropy_coef);
  read_number(obj, w, "learning_rate", c.learning_rate);
  read_number(obj, w, "vf_coef", c.vf_coef);
  read_number(obj, w, "max_grad_norm", c.max_grad_norm);
  read_number(obj, w, "n_epochs", c.n_epochs);
  read_number(obj, w, "iterations", c.iterations);
  read_number(obj, w, "clip_range", c.clip_range);
  read_number(obj, w, "gae_lambda", c.gae_lambda);
  read_number(obj, w, "minibatch_size", c.minibatch_size);
  read_number(obj, w, "horizon", c.horizon);
  read_number(obj, w, "eval_every", c.eval_every);
  read_bool(obj, w, "mean_observation", c.mean_observation);
  if (obj.contains("hidden_sizes")) {
    const json& h = obj.at("hidden_sizes");
    if (!h.is_array()) fail("ppo.hidden_sizes", "expected a list of integers");
    c.hidden_sizes.clear();
    for (const auto& v : h) {
      if (!v.is_number_integer()) fail("ppo.hidden_sizes", "expected a list of integers");
      c.hidden_sizes.push_back(v.get<int>());
    }
  }
}

void read_metric(const json& obj, MetricConfig& m) {
  const std::string w = "metric";
  check_keys(obj, w, {"gamma", "theta_weight", "distance", "clamp_negative", "k"});
  read_number(obj, w, "gamma", m.gamma);
  read_number(obj, w, "theta_weight", m.theta_weight);
  read_number(obj, w, "k", m.k);
  read_bool(obj, w, "clamp_negative", m.clamp_negative);
  if (obj.contains("distance")) {
    const std::string d = read_string(obj.at("distance"), "metric.distance");
    if (d == "divergence") m.kind = DistanceKind::Divergence;
    else if (d == "raw") m.kind = DistanceKind::Raw;
    else fail("metric.distance", "expected 'divergence' or 'raw'");
  }
}

// Scenario keys may sit at the top level (flat form) or inside "scenario".
void read_scenario_fields(const json& obj, const std::string& w, ScenarioSpec& s, bool& kind_given,
                          const json*& ranges, const json*& secondary_ranges) {
  if (obj.contains("kind")) {
    const auto k = parse_scenario_kind(read_string(obj.at("kind"), path_of(w, "kind")));
    if (!k) fail(path_of(w, "kind"), "unknown scenario kind");
    s.kind = *k;
    kind_given = true;
  }
  if (obj.contains("primary_factor")) s.primary = read_factor(obj.at("primary_factor"), path_of(w, "primary_factor"));
  if (obj.contains("secondary_factor") && !obj.at("secondary_factor").is_null())
    s.secondary = read_factor(obj.at("secondary_factor"), path_of(w, "secondary_factor"));
  if (obj.contains("path")) {
    try {
      s.side_path = parse_side_path(read_string(obj.at("path"), path_of(w, "path")));
    } catch (const std::invalid_argument& e) {
      fail(path_of(w, "path"), e.what());
    }
  }
  read_number(obj, w, "halvings", s.halvings);
  if (obj.contains("anm_scenario") && !obj.at("anm_scenario").is_null()) {
    const auto id = parse_anm(read_string(obj.at("anm_scenario"), path_of(w, "anm_scenario")));
    if (!id) fail(path_of(w, "anm_scenario"), "expected one of C1..C6");
    s.anm = *id;
  }
  read_bool(obj, w, "zero_noise", s.anm_zero_noise);
  if (obj.contains("ranges") && !obj.at("ranges").is_null()) ranges = &obj.at("ranges");
  if (obj.contains("secondary_ranges") && !obj.at("secondary_ranges").is_null())
    secondary_ranges = &obj.at("secondary_ranges");
}

json range_json(const RangePair& r) { return json::array({{r.low.low, r.low.high}, {r.high.low, r.high.high}}); }

json to_json(const ExperimentConfig& c) {
  const ScenarioSpec& s = c.scenario;
  json scen = {
      {"kind", scenario_key(s.kind)},
      {"primary_factor", factor_key(s.primary)},
      {"secondary_factor", s.secondary ? json(factor_key(*s.secondary)) : json(nullptr)},
      {"path", format_side_path(s.side_path)},
      {"halvings", s.halvings},
      {"anm_scenario", anm_key(s.anm)},
      {"zero_noise", s.anm_zero_noise},
      {"ranges", s.ranges ? range_json(*s.ranges) : json(nullptr)},
      {"secondary_ranges", s.secondary_ranges ? range_json(*s.secondary_ranges) : json(nullptr)},
  };
  const CemConfig& cem = c.cem;
  const PpoConfig& ppo = c.ppo;
  const SimConfig& sim = c.sim;
  const MetricConfig& m = c.metric;
  return json{
      {"name", c.name},
      {"scenario", scen},
      {"planner", planner_key(c.planner)},
      {"n_envs", c.n_envs},
      {"holdout_envs", c.holdout_envs},
      {"seeds", c.seeds},
      {"cem",
       {{"plans_per_iter", cem.plans_per_iter},
        {"iterations", cem.iterations},
        {"elite_ratio", cem.elite_ratio},
        {"horizon", cem.horizon},
        {"init_std", cem.init_std},
        {"min_std", cem.min_std},
        {"extra_std_start", cem.extra_std_start},
        {"extra_std_end", cem.extra_std_end},
        {"keep_elites", cem.keep_elites}}},
      {"ppo",
       {{"gamma_discount", ppo.gamma_discount},
        {"entropy_coef", ppo.entropy_coef},
        {"learning_rate", ppo.learning_rate},
        {"vf_coef", ppo.vf_coef},
        {"max_grad_norm", ppo.max_grad_norm},
        {"n_epochs", ppo.n_epochs},
        {"iterations", ppo.iterations},
        {"hidden_sizes", ppo.hidden_sizes},
        {"clip_range", ppo.clip_range},
        {"gae_lambda", ppo.gae_lambda},
        {"minibatch_size", ppo.minibatch_size},
        {"horizon", ppo.horizon},
        {"eval_every", ppo.eval_every},
        {"mean_observation", ppo.mean_observation}}},
      {"sim",
       {{"frames", sim.frames},
        {"dt", sim.dt},
        {"substeps", sim.substeps},
        {"pusher_speed_scale", sim.pusher_speed_scale},
        {"contact_stiffness", sim.contact_stiffness},
        {"contact_damping", sim.contact_damping},
        {"pusher_start", {sim.pusher_start[0], sim.pusher_start[1]}},
        {"spin_coefficient", sim.spin_coefficient},
        {"observation", sim.observation == ObservationMode::Pose ? "pose" : "position"}}},
      {"metric",
       {{"gamma", m.gamma},
        {"theta_weight", m.theta_weight},
        {"distance", m.kind == DistanceKind::Divergence ? "divergence" : "raw"},
        {"clamp_negative", m.clamp_negative},
        {"k", m.k}}},
  };
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_envs < 4 || n_envs % 2 != 0) throw ConfigError("n_envs: must be even and at least 4");
  if (holdout_envs < 2 || holdout_envs % 2 != 0) throw ConfigError("holdout_envs: must be even and at least 2");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  const ScenarioSpec& s = scenario;
  switch (s.kind) {
    case ScenarioKind::Bipartition:
      if (s.side_path.size() > static_cast<std::size_t>(kMaxBipartitionDepth))
        throw ConfigError("scenario.path: at most 6 levels");
      break;
    case ScenarioKind::Gap:
      if (s.halvings < 0 || s.halvings > kMaxGapHalvings) throw ConfigError("scenario.halvings: must lie in [0, 4]");
      break;
    case ScenarioKind::TwoFactor:
      if (!s.secondary) throw ConfigError("scenario.secondary_factor: required for two_factor");
      if (*s.secondary == s.primary) throw ConfigError("scenario.secondary_factor: must differ from the primary");
      if (is_excluded_pair(s.primary, *s.secondary))
        throw ConfigError("scenario.secondary_factor: the mass/gravity pairing is excluded");
      if (n_envs % 4 != 0 || holdout_envs % 4 != 0)
        throw ConfigError("n_envs: two-factor batches need n_envs and holdout_envs divisible by 4");
      break;
    case ScenarioKind::Explicit:
      if (!s.ranges) throw ConfigError("ranges: required for explicit scenarios");
      break;
    default: break;
  }
  try {
    cem.validate();
    ppo.validate();
    metric.validate();
    sim.validate(planner == PlannerKind::Cem ? cem.horizon : ppo.horizon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(planner_key(planner)) + "/sim/metric: " + e.what());
  }
  if (cem.n_envs != n_envs || ppo.n_envs != n_envs) throw ConfigError("n_envs: planner sizes out of sync");
  if (cem.frames != sim.frames) throw ConfigError("sim.frames: planner frame count out of sync");
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed JSON (" +
                      e.what() + ")");
  }
  check_keys(root, "",
             {"name", "scenario", "primary_factor", "secondary_factor", "ranges", "secondary_ranges", "path",
              "halvings", "anm_scenario", "zero_noise", "kind", "planner", "n_envs", "holdout_envs", "seed", "seeds",
              "n_seeds", "cem", "ppo", "sim", "metric"});

  ExperimentConfig cfg;
  if (root.contains("name")) cfg.name = read_string(root.at("name"), "name");

  bool kind_given = false;
  const json* ranges = nullptr;
  const json* secondary_ranges = nullptr;
  read_scenario_fields(root, "", cfg.scenario, kind_given, ranges, secondary_ranges);
  if (root.contains("scenario")) {
    const json& s = root.at("scenario");
    if (s.is_string()) {
      const auto k = parse_scenario_kind(s.get<std::string>());
      if (!k) fail("scenario", "unknown scenario kind");
      cfg.scenario.kind = *k;
      kind_given = true;
    } else {
      check_keys(s, "scenario",
                 {"kind", "primary_factor", "secondary_factor", "path", "halvings", "anm_scenario", "zero_noise",
                  "ranges", "secondary_ranges"});
      read_scenario_fields(s, "scenario", cfg.scenario, kind_given, ranges, secondary_ranges);
    }
  }
  ScenarioSpec& sc = cfg.scenario;
  if (!kind_given) {
    if (root.contains("anm_scenario")) sc.kind = ScenarioKind::Anm;
    else if (sc.secondary) sc.kind = ScenarioKind::TwoFactor;
    else if (ranges) sc.kind = ScenarioKind::Explicit;
    else if (root.contains("path")) sc.kind = ScenarioKind::Bipartition;
    else if (root.contains("halvings")) sc.kind = ScenarioKind::Gap;
    else sc.kind = ScenarioKind::FullRange;
  }
  if (sc.kind == ScenarioKind::Anm) {
    const AnmScenario a = anm_scenario(sc.anm);
    sc.primary = a.cluster_target.front();
  }
  if (ranges) sc.ranges = read_ranges(*ranges, sc.primary, "ranges");
  if (secondary_ranges) {
    if (!sc.secondary) fail("secondary_ranges", "given without a secondary_factor");
    sc.secondary_ranges = read_ranges(*secondary_ranges, *sc.secondary, "secondary_ranges");
  }

  if (root.contains("planner")) {
    const auto p = parse_planner(read_string(root.at("planner"), "planner"));
    if (!p) fail("planner", "expected 'cem' or 'ppo'");
    cfg.planner = *p;
  }
  read_number(root, "", "n_envs", cfg.n_envs);
  read_number(root, "", "holdout_envs", cfg.holdout_envs);
  if (root.contains("seeds")) {
    const json& s = root.at("seeds");
    if (!s.is_array()) fail("seeds", "expected a list of non-negative integers");
    cfg.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) fail("seeds", "expected a list of non-negative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  } else if (root.contains("seed") || root.contains("n_seeds")) {
    std::uint64_t base = 0;
    int count = 1;
    read_number(root, "", "seed", base);
    read_number(root, "", "n_seeds", count);
    if (count < 1) fail("n_seeds", "must be at least 1");
    cfg.seeds.clear();
    for (int i = 0; i < count; ++i) cfg.seeds.push_back(base + static_cast<std::uint64_t>(i));
  }
  if (root.contains("cem")) read_cem(root.at("cem"), cfg.cem);
  if (root.contains("ppo")) read_ppo(root.at("ppo"), cfg.ppo);
  if (root.contains("sim")) read_sim(root.at("sim"), cfg.sim);
  if (root.contains("metric")) read_metric(root.at("metric"), cfg.metric);
  cfg.cem.n_envs = cfg.ppo.n_envs = cfg.n_envs;
  cfg.cem.frames = cfg.sim.frames;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string canonical_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(); }

std::string fingerprint(const ExperimentConfig& cfg) { return hex16(fnv1a(canonical_json(cfg))); }

std::string scenario_label(const ScenarioSpec& s) {
  const std::string f(factor_key(s.primary));
  switch (s.kind) {
    case ScenarioKind::FullRange: return f + "/full";
    case ScenarioKind::Bipartition: return f + "/bip:" + (s.side_path.empty() ? "-" : format_side_path(s.side_path));
    case ScenarioKind::Gap: return f + "/gap:" + std::to_string(s.halvings);
    case ScenarioKind::TwoFactor: return f + "+" + std::string(factor_key(s.secondary.value_or(s.primary)));
    case ScenarioKind::Anm: return std::string("anm:") + std::string(anm_key(s.anm)) + (s.anm_zero_noise ? "/zero" : "");
    case ScenarioKind::Explicit: return f + "/explicit";
  }
  return f;
}

ResolvedScenario resolve(const ScenarioSpec& s) {
  ResolvedScenario r;
  r.primary = s.primary;
  const FactorRange full = global_range(s.primary);
  switch (s.kind) {
    case ScenarioKind::FullRange: r.ranges = thirds_partition(full); break;
    case ScenarioKind::Bipartition: r.ranges = bipartition_descend(full, s.side_path); break;
    case ScenarioKind::Gap: r.ranges = gap_schedule(full, s.halvings); break;
    case ScenarioKind::Explicit: r.ranges = s.ranges.value(); break;
    case ScenarioKind::TwoFactor:
      r.ranges = s.ranges.value_or(thirds_partition(full));
      r.secondary = s.secondary.value();
      r.secondary_ranges = s.secondary_ranges.value_or(thirds_partition(global_range(*r.secondary)));
      break;
    case ScenarioKind::Anm: {
      r.anm = anm_scenario(s.anm, s.anm_zero_noise);
      r.primary = r.anm->cluster_target.front();
      const auto& declared = r.anm->declared_for(r.primary);
      // informational only; the batch labels come from the mechanism
      const Interval lo = declared.ranges.front(), hi = declared.ranges.back();
      r.ranges = {FactorRange{r.primary, lo.low, lo.high}, FactorRange{r.primary, hi.low, hi.high}};
      break;
    }
  }
  return r;
}

EnvironmentBatch ResolvedScenario::make_batch(int n_envs, std::uint64_t seed) const {
  if (anm) return sample_anm_batch(*anm, n_envs, seed);
  if (secondary) return make_two_factor_batch(primary, *secondary, ranges, *secondary_ranges, n_envs, seed);
  return make_bimodal_batch(primary, ranges.low, ranges.high, n_envs, seed);
}

std::uint64_t training_seed(std::uint64_t seed) { return derive_seed(seed, 0x7a1); }
std::uint64_t holdout_seed(std::uint64_t seed) { return derive_seed(seed, 0x401d); }
std::uint64_t planner_seed(std::uint64_t seed) { return derive_seed(seed, 0x91a); }

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

void ReplicationResult::recompute_aggregates() {
  std::vector<double> tf, ts, tt, hf, hs;
  for (const auto& s : seeds) {
    if (!s.ok) continue;
    tf.push_back(s.train.f1);
    ts.push_back(s.train.silhouette);
    tt.push_back(s.train.total);
    hf.push_back(s.holdout_f1);
    hs.push_back(s.holdout_silhouette);
  }
  train_f1 = aggregate(tf);
  train_silhouette = aggregate(ts);
  train_total = aggregate(tt);
  holdout_f1 = aggregate(hf);
  holdout_silhouette = aggregate(hs);
}

std::optional<SeedResult> ResultCache::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResultCache::store(const std::string& key, const SeedResult& r) {
  std::lock_guard lock(mu_);
  entries_.emplace(key, r);
}

std::size_t ResultCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

namespace {

// Everything a seed's outcome depends on, independent of how the scenario was named.
std::string job_key(const ExperimentConfig& cfg, const ResolvedScenario& r, std::uint64_t seed) {
  json j = to_json(cfg);
  j.erase("name");
  j.erase("seeds");
  j.erase("scenario");
  j[cfg.planner == PlannerKind::Cem ? "ppo" : "cem"] = nullptr;
  json batch = {{"primary", factor_key(r.primary)}, {"ranges", range_json(r.ranges)}};
  if (r.secondary) {
    batch["secondary"] = factor_key(*r.secondary);
    batch["secondary_ranges"] = range_json(*r.secondary_ranges);
  }
  if (r.anm) {
    batch["anm"] = anm_key(r.anm->id);
    batch["zero_noise"] = cfg.scenario.anm_zero_noise;
  }
  j["batch"] = batch;
  j["seed"] = seed;
  return j.dump();
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const Executor* executor) {
  SeedResult out;
  out.seed = seed;
  const ResolvedScenario r = resolve(cfg.scenario);
  const EnvironmentBatch train = r.make_batch(cfg.n_envs, training_seed(seed));
  std::ostringstream trace;
  PlanSearchResult search;
  try {
    if (cfg.planner == PlannerKind::Cem)
      search = cem_optimize(train, cfg.sim, cfg.cem, planner_seed(seed), cfg.metric, executor, &trace);
    else
      search = ppo_optimize(train, cfg.sim, cfg.ppo, planner_seed(seed), cfg.metric, executor, &trace);
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    out.trace = trace.str();
    return out;
  }
  out.trace = trace.str();
  out.best_plan = search.best_plan;
  out.train = search.best_reward;
  out.evaluations = search.evaluations;

  const auto train_trajs = rollout_batch(train, search.best_plan, cfg.sim, executor);
  const ClusterModel model = fit_two_medoids(pairwise_distances(train_trajs, cfg.metric, executor), train_trajs,
                                             cfg.metric);
  const EnvironmentBatch holdout = r.make_batch(cfg.holdout_envs, holdout_seed(seed));
  const auto hold_trajs = rollout_batch(holdout, search.best_plan, cfg.sim, executor);
  const Labels pred = assign_all(model, hold_trajs, executor);
  out.holdout_f1 = f1_matched(pred, holdout.true_labels);
  const auto ones = std::count(pred.begin(), pred.end(), std::uint8_t{1});
  out.holdout_degenerate = ones == 0 || static_cast<std::size_t>(ones) == pred.size() || pred.size() < 3;
  out.holdout_silhouette = out.holdout_degenerate
                               ? 0.0
                               : silhouette(pairwise_distances(hold_trajs, cfg.metric, executor), pred,
                                            cfg.metric.clamp_negative);
  return out;
}

ReplicationResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  ReplicationResult result;
  result.config = cfg;
  result.fingerprint = fingerprint(cfg);
  result.label = cfg.name.empty() ? scenario_label(cfg.scenario) : cfg.name;
  result.resolved = resolve(cfg.scenario);
  result.seeds.resize(cfg.seeds.size());
  for_each_index(opts.executor, cfg.seeds.size(), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const std::string key = opts.cache ? job_key(cfg, result.resolved, seed) : std::string();
    if (opts.cache) {
      if (auto hit = opts.cache->find(key)) {
        result.seeds[i] = *hit;
        return;
      }
    }
    result.seeds[i] = run_seed(cfg, seed, opts.executor);
    if (opts.cache) opts.cache->store(key, result.seeds[i]);
  });
  result.recompute_aggregates();
  if (opts.out_dir) write_result(result, *opts.out_dir);
  return result;
}

// ---- suites

namespace {

ExperimentConfig with_scenario(const ExperimentConfig& base, const ScenarioSpec& s) {
  ExperimentConfig c = base;
  c.name.clear();
  c.scenario = s;
  return c;
}

// L/R in the suites follow the published orientation, which lists gravity from -1 down.
std::vector<Side> published_path(Factor f, Side side, int depth) {
  Side stored = side;
  if (factor_info(f).listed_descending) stored = side == Side::L ? Side::R : Side::L;
  return std::vector<Side>(static_cast<std::size_t>(depth), stored);
}

}  // namespace

std::vector<ReplicationResult> run_full_range_suite(const ExperimentConfig& base, const RunOptions& opts) {
  std::vector<ReplicationResult> out;
  for (Factor f : kAllFactors) {
    ScenarioSpec s;
    s.kind = ScenarioKind::FullRange;
    s.primary = f;
    out.push_back(run_experiment(with_scenario(base, s), opts));
  }
  return out;
}

std::vector<ReplicationResult> run_bipartition_suite(Factor factor, int depth, const ExperimentConfig& base,
                                                     const RunOptions& opts) {
  if (depth < 0 || depth > kMaxBipartitionDepth) throw std::invalid_argument("bipartition depth must lie in [0, 6]");
  ScenarioSpec full;
  full.kind = ScenarioKind::FullRange;
  full.primary = factor;
  std::vector<ReplicationResult> out;
  out.push_back(run_experiment(with_scenario(base, full), opts));
  if (depth == 0) {
    out.push_back(out.front());
    out.push_back(out.front());
    return out;
  }
  for (Side side : {Side::L, Side::R}) {
    ScenarioSpec s;
    s.kind = ScenarioKind::Bipartition;
    s.primary = factor;
    s.side_path = published_path(factor, side, depth);
    out.push_back(run_experiment(with_scenario(base, s), opts));
  }
  return out;
}

std::vector<ReplicationResult> run_gap_suite(Factor factor, const ExperimentConfig& base, const RunOptions& opts) {
  std::vector<ReplicationResult> out;
  for (int h = 0; h <= kMaxGapHalvings; ++h) {
    ScenarioSpec s;
    s.kind = ScenarioKind::Gap;
    s.primary = factor;
    s.halvings = h;
    out.push_back(run_experiment(with_scenario(base, s), opts));
  }
  return out;
}

TwoFactorGrid run_two_factor_grid(const ExperimentConfig& base, const RunOptions& opts) {
  TwoFactorGrid grid;
  for (Factor p : kAllFactors)
    for (Factor q : kAllFactors) {
      if (p == q) continue;
      if (is_excluded_pair(p, q)) {
        grid.skipped.emplace_back(p, q);
        continue;
      }
      ScenarioSpec s;
      s.kind = ScenarioKind::TwoFactor;
      s.primary = p;
      s.secondary = q;
      grid.cells[index_of(p)][index_of(q)] = run_experiment(with_scenario(base, s), opts);
    }
  return grid;
}

std::vector<ReplicationResult> run_anm_suite(const ExperimentConfig& base, const RunOptions& opts, bool zero_noise) {
  std::vector<ReplicationResult> out;
  for (AnmScenarioId id : kAllAnmScenarios) {
    ScenarioSpec s;
    s.kind = ScenarioKind::Anm;
    s.anm = id;
    s.anm_zero_noise = zero_noise;
    s.primary = anm_scenario(id).cluster_target.front();
    out.push_back(run_experiment(with_scenario(base, s), opts));
  }
  return out;
}

}  // namespace curio
