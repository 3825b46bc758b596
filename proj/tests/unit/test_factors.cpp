#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "curio/factors.hpp"

using namespace curio;

namespace {

// Published endpoints are rounded to the printed number of decimals.
struct Printed {
  double value;
  int decimals;
};

Printed printed(const std::string& s) {
  const auto dot = s.find('.');
  return {std::stod(s), dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1)};
}

bool rounds_to(double exact, const std::string& s) {
  const Printed p = printed(s);
  return std::abs(exact - p.value) <= 0.5 * std::pow(10.0, -p.decimals) + 1e-12;
}

// "[a,b][c,d]" as printed; gravity rows are printed high-to-low.
void check_rows(const RangePair& r, const std::string& a, const std::string& b, const std::string& c,
                const std::string& d) {
  std::array<std::string, 4> s{a, b, c, d};
  std::array<double, 4> exact{r.low.low, r.low.high, r.high.low, r.high.high};
  if (printed(a).value > printed(d).value) std::reverse(exact.begin(), exact.end());
  for (int i = 0; i < 4; ++i) CHECK_MESSAGE(rounds_to(exact[i], s[i]), "endpoint " << i << ": " << exact[i] << " vs " << s[i]);
}

std::vector<Side> repeat(Side s, int n) { return std::vector<Side>(static_cast<std::size_t>(n), s); }

}  // namespace

TEST_CASE("factor table") {
  CHECK(factor_info(Factor::Mass).default_value == 0.25);
  CHECK(factor_info(Factor::Size).default_value == 0.075);
  CHECK(factor_info(Factor::LateralFriction).default_value == 1.0);
  CHECK(factor_info(Factor::SpinningFriction).default_value == 0.001);
  CHECK(factor_info(Factor::Gravity).default_value == -9.81);
  CHECK(global_range(Factor::Gravity).low == -11.5);
  CHECK(global_range(Factor::Gravity).high == -1.0);
  CHECK(factor_info(Factor::Gravity).listed_descending);
  for (Factor f : kAllFactors) {
    CHECK(parse_factor(factor_key(f)) == f);
    CHECK(global_range(f).interval().contains(factor_info(f).default_value));
  }
  CHECK_FALSE(parse_factor("density").has_value());
  CHECK_THROWS_AS(make_range(Factor::Mass, 0.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(make_range(Factor::Mass, 0.3, 0.2), std::invalid_argument);
}

TEST_CASE("full-range thirds match the published rows") {
  check_rows(thirds_partition(global_range(Factor::Mass)), "0.01", "0.1733", "0.3367", "0.5");
  check_rows(thirds_partition(global_range(Factor::Size)), "0.05", "0.0667", "0.0833", "0.1");
  check_rows(thirds_partition(global_range(Factor::LateralFriction)), "0.1", "0.4", "0.7", "1.0");
  check_rows(thirds_partition(global_range(Factor::SpinningFriction)), "0.001", "0.334", "0.667", "1.0");
  check_rows(thirds_partition(global_range(Factor::Gravity)), "-1.0", "-4.5", "-8.0", "-11.5");
}

TEST_CASE("bipartition depth 6 matches the published L/R rows") {
  using S = Side;
  const auto full = [](Factor f) { return global_range(f); };
  check_rows(bipartition_descend(full(Factor::Mass), repeat(S::L, 6)), "0.01", "0.0102", "0.0104", "0.0107");
  check_rows(bipartition_descend(full(Factor::Mass), repeat(S::R, 6)), "0.4993", "0.4996", "0.4998", "0.5");
  check_rows(bipartition_descend(full(Factor::Size), repeat(S::L, 6)), "0.05", "0.05002", "0.05005", "0.05007");
  check_rows(bipartition_descend(full(Factor::Size), repeat(S::R, 6)), "0.09993", "0.09995", "0.09998", "0.1");
  check_rows(bipartition_descend(full(Factor::LateralFriction), repeat(S::L, 6)), "0.1", "0.1004", "0.1008",
             "0.1012");
  check_rows(bipartition_descend(full(Factor::LateralFriction), repeat(S::R, 6)), "0.9988", "0.9992", "0.9996",
             "1.0");
  check_rows(bipartition_descend(full(Factor::SpinningFriction), repeat(S::L, 6)), "0.001", "0.0015", "0.0019",
             "0.0024");
  check_rows(bipartition_descend(full(Factor::SpinningFriction), repeat(S::R, 6)), "0.9986", "0.9991", "0.9995",
             "1.0");
  // gravity is listed from -1 downwards, so its published L side is the upper end of the stored range
  check_rows(bipartition_descend(full(Factor::Gravity), repeat(S::R, 6)), "-1.0", "-1.0048", "-1.0096", "-1.0144");
  check_rows(bipartition_descend(full(Factor::Gravity), repeat(S::L, 6)), "-11.4856", "-11.4904", "-11.4952",
             "-11.5");
}

TEST_CASE("bipartition geometry") {
  const FactorRange full = global_range(Factor::Mass);
  for (int depth = 0; depth <= kMaxBipartitionDepth; ++depth) {
    for (Side s : {Side::L, Side::R}) {
      const RangePair r = bipartition_descend(full, repeat(s, depth));
      const double parent = full.width() / std::pow(3.0, depth);
      CHECK(r.low.width() == doctest::Approx(parent / 3).epsilon(1e-9));
      CHECK(r.high.width() == doctest::Approx(parent / 3).epsilon(1e-9));
      CHECK((r.high.low - r.low.high) == doctest::Approx(parent / 3).epsilon(1e-9));
      CHECK(full.interval().contains(r.low.low, 1e-15));
      CHECK(full.interval().contains(r.high.high, 1e-15));
    }
  }
  CHECK(bipartition_descend(full, {}) == thirds_partition(full));
  CHECK_THROWS(bipartition_descend(full, repeat(Side::L, 7)));
}

TEST_CASE("gap schedule matches the published G rows") {
  check_rows(gap_schedule(global_range(Factor::Mass), 4), "0.01", "0.2499", "0.2601", "0.5");
  check_rows(gap_schedule(global_range(Factor::Size), 4), "0.05", "0.0745", "0.0755", "0.1");
  check_rows(gap_schedule(global_range(Factor::LateralFriction), 4), "0.1", "0.5406", "0.5594", "1.0");
  check_rows(gap_schedule(global_range(Factor::SpinningFriction), 4), "0.001", "0.4901", "0.5109", "1.0");
  check_rows(gap_schedule(global_range(Factor::Gravity), 4), "-1.0", "-6.1406", "-6.3594", "-11.5");
}

TEST_CASE("gap schedule geometry") {
  for (Factor f : kAllFactors) {
    const FactorRange full = global_range(f);
    CHECK(gap_schedule(full, 0) == thirds_partition(full));
    for (int h = 0; h <= kMaxGapHalvings; ++h) {
      const RangePair r = gap_schedule(full, h);
      const double gap = r.high.low - r.low.high;
      CHECK(gap == doctest::Approx(full.width() / (3.0 * std::pow(2.0, h))).epsilon(1e-9));
      CHECK(r.low.low == full.low);
      CHECK(r.high.high == full.high);
      CHECK(r.low.width() == doctest::Approx(r.high.width()).epsilon(1e-12));
    }
    // ratio of gap to cluster width at 4 halvings
    const RangePair r4 = gap_schedule(full, 4);
    CHECK((r4.high.low - r4.low.high) / r4.low.width() == doctest::Approx(2.0 / 47.0));
    CHECK_THROWS(gap_schedule(full, 5));
  }
}

TEST_CASE("side paths") {
  CHECK(parse_side_path("LrRl") == std::vector<Side>{Side::L, Side::R, Side::R, Side::L});
  CHECK(format_side_path(parse_side_path("lrr")) == "LRR");
  CHECK(parse_side_path("").empty());
  CHECK_THROWS_AS(parse_side_path("LXR"), std::invalid_argument);
}

TEST_CASE("bimodal batch") {
  const RangePair r = thirds_partition(global_range(Factor::LateralFriction));
  const EnvironmentBatch b = make_bimodal_batch(Factor::LateralFriction, r.low, r.high, 20, 7);
  REQUIRE(b.size() == 20);
  CHECK(std::count(b.true_labels.begin(), b.true_labels.end(), 1) == 10);
  const FactorAssignment def = FactorAssignment::defaults();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const FactorRange& src = b.true_labels[i] ? r.high : r.low;
    CHECK(src.interval().contains(b.specs[i].lateral_friction()));
    for (Factor f : kAllFactors)
      if (f != Factor::LateralFriction) CHECK(b.specs[i][f] == def[f]);
  }
  CHECK(b == make_bimodal_batch(Factor::LateralFriction, r.low, r.high, 20, 7));
  CHECK_FALSE(b == make_bimodal_batch(Factor::LateralFriction, r.low, r.high, 20, 8));
  CHECK_THROWS(make_bimodal_batch(Factor::LateralFriction, r.low, r.high, 7, 1));
}

TEST_CASE("two-factor batch") {
  const RangePair p = thirds_partition(global_range(Factor::Size));
  const RangePair s = thirds_partition(global_range(Factor::SpinningFriction));
  const EnvironmentBatch b = make_two_factor_batch(Factor::Size, Factor::SpinningFriction, p, s, 20, 3);
  REQUIRE(b.size() == 20);
  int counts[2][2] = {};
  for (std::size_t i = 0; i < b.size(); ++i) {
    const int label = b.true_labels[i];
    CHECK((label ? p.high : p.low).interval().contains(b.specs[i].size()));
    const double sf = b.specs[i].spinning_friction();
    const bool high = s.high.interval().contains(sf);
    CHECK((high || s.low.interval().contains(sf)));
    ++counts[label][high ? 1 : 0];
  }
  CHECK(counts[0][0] == 5);
  CHECK(counts[0][1] == 5);
  CHECK(counts[1][0] == 5);
  CHECK(counts[1][1] == 5);
  CHECK(is_excluded_pair(Factor::Mass, Factor::Gravity));
  CHECK(is_excluded_pair(Factor::Gravity, Factor::Mass));
  CHECK_FALSE(is_excluded_pair(Factor::Mass, Factor::Size));
}

TEST_CASE("additive-noise scenarios") {
  for (AnmScenarioId id : kAllAnmScenarios) {
    CHECK(parse_anm(anm_key(id)) == id);
    const AnmScenario s = anm_scenario(id);
    const auto draws = sample_anm_draws(s, 20, 11);
    REQUIRE(draws.size() == 20);
    const EnvironmentBatch b = sample_anm_batch(s, 20, 11);
    CHECK(std::count(b.true_labels.begin(), b.true_labels.end(), 1) == 10);
    CHECK(b.primary_factor == s.cluster_target.front());
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const AnmComponent& comp = s.components[draws[i].component];
      CHECK(comp.cause_range.contains(draws[i].cause));
      for (std::size_t e = 0; e < comp.effects.size(); ++e) {
        const EffectMap& m = comp.effects[e];
        CHECK(std::abs(draws[i].noise[e]) <= m.noise_half_width);
        CHECK(draws[i].effects[e] == doctest::Approx(m.center(draws[i].cause) + draws[i].noise[e]));
        CHECK(b.specs[i][m.effect] == draws[i].effects[e]);
      }
    }
  }
}

TEST_CASE("zero-noise mechanism is a function of the cause") {
  for (AnmScenarioId id : {AnmScenarioId::C1, AnmScenarioId::C3}) {
    const AnmScenario s = anm_scenario(id, true);
    const auto draws = sample_anm_draws(s, 20, 5);
    for (const auto& d : draws) {
      const AnmComponent& comp = s.components[d.component];
      for (std::size_t e = 0; e < comp.effects.size(); ++e) CHECK(d.effects[e] == comp.effects[e].center(d.cause));
    }
    // gravity and lateral friction induce the same partition
    const EnvironmentBatch b = sample_anm_batch(s, 20, 5);
    std::vector<std::pair<double, int>> by_l;
    for (std::size_t i = 0; i < b.size(); ++i) by_l.emplace_back(b.specs[i].lateral_friction(), b.true_labels[i]);
    std::sort(by_l.begin(), by_l.end());
    // labels sorted by lateral friction form two contiguous blocks
    int changes = 0;
    for (std::size_t i = 1; i < by_l.size(); ++i) changes += by_l[i].second != by_l[i - 1].second;
    CHECK(changes == 1);
    std::vector<std::pair<double, int>> by_g;
    for (std::size_t i = 0; i < b.size(); ++i) by_g.emplace_back(b.specs[i].gravity(), b.true_labels[i]);
    std::sort(by_g.begin(), by_g.end());
    changes = 0;
    for (std::size_t i = 1; i < by_g.size(); ++i) changes += by_g[i].second != by_g[i - 1].second;
    CHECK(changes == 1);
  }
}

TEST_CASE("holdout-style reseeding gives disjoint samples") {
  const RangePair r = thirds_partition(global_range(Factor::Mass));
  const auto a = make_bimodal_batch(Factor::Mass, r.low, r.high, 20, 100);
  const auto b = make_bimodal_batch(Factor::Mass, r.low, r.high, 20, 101);
  for (const auto& x : a.specs)
    for (const auto& y : b.specs) CHECK(x.mass() != y.mass());
}
