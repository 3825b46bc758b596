#include <doctest.h>

#include <algorithm>

#include "curio/clustering.hpp"
#include "curio/parallel.hpp"
#include "curio/random.hpp"

using namespace curio;

namespace {

// Two groups of short series around different offsets.
std::vector<Trajectory> two_groups(Rng& rng, int per_group, double offset) {
  std::vector<Trajectory> out;
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < per_group; ++i) {
      Trajectory t(10, 3);
      for (std::size_t f = 0; f < 10; ++f) {
        t.at(f, 0) = g * offset + 0.01 * static_cast<double>(f) + uniform(rng, -0.05, 0.05);
        t.at(f, 1) = uniform(rng, -0.05, 0.05);
        t.at(f, 2) = 0.0;
      }
      out.push_back(std::move(t));
    }
  return out;
}

}  // namespace

TEST_CASE("separated groups are recovered") {
  Rng rng(1);
  const auto trajs = two_groups(rng, 6, 1.0);
  const MetricConfig metric;
  const ClusterModel m = fit_two_medoids(trajs, metric, 0);
  REQUIRE_FALSE(m.degenerate);
  for (int i = 1; i < 6; ++i) CHECK(m.training_labels[i] == m.training_labels[0]);
  for (int i = 7; i < 12; ++i) CHECK(m.training_labels[i] == m.training_labels[6]);
  CHECK(m.training_labels[0] != m.training_labels[6]);
  // out-of-sample points follow the medoid they sit next to
  const auto fresh = two_groups(rng, 3, 1.0);
  const Labels a = assign_all(m, fresh);
  CHECK(a[0] == m.training_labels[0]);
  CHECK(a[5] == m.training_labels[6]);
}

TEST_CASE("fitted medoids minimise the within-cluster cost") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto trajs = two_groups(rng, 5, 0.1 * trial);
    const MetricConfig metric;
    const DistanceMatrix d = pairwise_distances(trajs, metric);
    const ClusterModel m = fit_two_medoids(d, trajs, metric);
    if (m.degenerate) continue;
    // labels follow the nearer medoid
    for (std::size_t i = 0; i < d.n; ++i) {
      const double d0 = d(i, m.medoid_indices[0]), d1 = d(i, m.medoid_indices[1]);
      CHECK(m.training_labels[i] == (d1 < d0 ? 1 : 0));
    }
    // each medoid is the cheapest member of its own cluster, checked against every member
    for (std::uint8_t c = 0; c < 2; ++c) {
      auto within = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d.n; ++i)
          if (m.training_labels[i] == c) s += d(i, k);
        return s;
      };
      CHECK(m.training_labels[m.medoid_indices[c]] == c);
      const double mine = within(m.medoid_indices[c]);
      for (std::size_t k = 0; k < d.n; ++k)
        if (m.training_labels[k] == c) CHECK(mine <= within(k) + 1e-12 * (1 + mine));
    }
    CHECK(m.sweeps <= kMaxMedoidSweeps);
  }
}

TEST_CASE("identical trajectories give a degenerate model") {
  const Trajectory t = Trajectory::from_rows({{0, 0, 0}, {1, 1, 0}});
  const std::vector<Trajectory> trajs(5, t);
  const ClusterModel m = fit_two_medoids(trajs, MetricConfig{}, 0);
  CHECK(m.degenerate);
  CHECK(std::all_of(m.training_labels.begin(), m.training_labels.end(), [](auto l) { return l == 0; }));
  CHECK(assign(m, t) == 0);
}

TEST_CASE("fit and assignment do not depend on parallelism") {
  Rng rng(2);
  const auto trajs = two_groups(rng, 5, 0.3);
  const Executor ex(3);
  const ClusterModel a = fit_two_medoids(trajs, MetricConfig{}, 0);
  const ClusterModel b = fit_two_medoids(trajs, MetricConfig{}, 0, &ex);
  CHECK(a.training_labels == b.training_labels);
  CHECK(a.medoid_indices == b.medoid_indices);
  CHECK(assign_all(a, trajs) == assign_all(a, trajs, &ex));
}
