#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "curio/random.hpp"
#include "curio/simd/soft_dtw.hpp"

using namespace curio;
using namespace curio::simd;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

struct Series {
  std::vector<double> data;
  std::size_t length;
  SeriesRef ref() const { return {data.data(), length}; }
};

Series random_series(Rng& rng, std::size_t length, std::size_t dim, double scale = 1.0) {
  Series s{std::vector<double>(length * dim), length};
  for (double& v : s.data) v = uniform(rng, -scale, scale);
  return s;
}

}  // namespace

TEST_CASE("isa names") {
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512}) CHECK(parse_isa(isa_name(isa)) == isa);
  CHECK_FALSE(parse_isa("neon").has_value());
  CHECK(isa_available(Isa::Scalar));
  CHECK(lane_width(Isa::Scalar) == 1);
  CHECK(lane_width(Isa::Avx2) == 4);
  CHECK(lane_width(Isa::Avx512) == 8);
}

TEST_CASE("vector kernels agree with the scalar reference") {
  Rng rng(42);
  const std::size_t dim = 3;
  const double weights[3] = {1.0, 1.0, 0.075 * 0.075};
  // mixed lengths so groups have ragged lane counts
  std::vector<Series> as, bs;
  for (int k = 0; k < 29; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(k % 3) * 20, m = 1 + static_cast<std::size_t>(k % 2) * 33;
    as.push_back(random_series(rng, n, dim));
    bs.push_back(random_series(rng, m, dim));
  }
  as.push_back(random_series(rng, 198, dim, 0.5));
  bs.push_back(random_series(rng, 198, dim, 0.5));
  std::vector<PairTask> tasks;
  for (std::size_t i = 0; i < as.size(); ++i) tasks.push_back({as[i].ref(), bs[i].ref()});

  for (double gamma : {0.0, 0.1, 1.0}) {
    std::vector<double> expect(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i)
      expect[i] = soft_dtw_reference(tasks[i].a, tasks[i].b, dim, weights, gamma);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512}) {
      if (!isa_available(isa)) continue;
      CAPTURE(isa_name(isa));
      CAPTURE(gamma);
      std::vector<double> got(tasks.size());
      soft_dtw_batch(tasks, dim, weights, gamma, got, isa);
      // vector exp/log and fused multiply-adds differ from libm by a few ulp
      for (std::size_t i = 0; i < tasks.size(); ++i)
        CHECK(std::abs(got[i] - expect[i]) <= 1e-12 * std::max(1.0, std::abs(expect[i])));
      // a task evaluated alone gives the same bits as inside a full lane group
      std::vector<double> one(1);
      soft_dtw_batch(std::span(tasks).subspan(3, 1), dim, weights, gamma, one, isa);
      CHECK(same_bits(one[0], got[3]));
    }
  }
}

TEST_CASE("reference kernel is symmetric under transposition") {
  Rng rng(9);
  const Series a = random_series(rng, 17, 2), b = random_series(rng, 23, 2);
  const double w[2] = {1.0, 1.0};
  for (double gamma : {0.0, 0.1, 1.0})
    CHECK(same_bits(soft_dtw_reference(a.ref(), b.ref(), 2, w, gamma),
                    soft_dtw_reference(b.ref(), a.ref(), 2, w, gamma)));
}

TEST_CASE("hard DTW of identical series is zero") {
  Rng rng(4);
  const Series a = random_series(rng, 12, 3);
  const double w[3] = {1.0, 1.0, 1.0};
  CHECK(soft_dtw_reference(a.ref(), a.ref(), 3, w, 0.0) == 0.0);
  // soft-min over many zero-ish paths goes negative
  CHECK(soft_dtw_reference(a.ref(), a.ref(), 3, w, 1.0) < 0.0);
}

TEST_CASE("active isa can be forced") {
  const Isa before = active_isa();
  set_active_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  set_active_isa(before);
  CHECK(active_isa() == before);
}
