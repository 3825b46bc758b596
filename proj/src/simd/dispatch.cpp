#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curio/simd/soft_dtw.hpp"
#include "kernels.hpp"

namespace curio::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Avx512: return "avx512";
  }
  return "?";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "avx512") return Isa::Avx512;
  return std::nullopt;
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(CURIO_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Avx512:
#if defined(CURIO_HAVE_AVX512) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::size_t lane_width(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return 1;
    case Isa::Avx2: return 4;
    case Isa::Avx512: return 8;
  }
  return 1;
}

Isa detect_isa() {
  if (const char* env = std::getenv("CURIO_SIMD"); env && *env) {
    const auto wanted = parse_isa(env);
    if (wanted && isa_available(*wanted)) return *wanted;
  }
  if (isa_available(Isa::Avx512)) return Isa::Avx512;
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  return Isa::Scalar;
}

namespace {

std::atomic<int>& active_slot() {
  static std::atomic<int> slot{static_cast<int>(detect_isa())};
  return slot;
}

void check_inputs(SeriesRef a, SeriesRef b, std::size_t dim, std::span<const double> weights, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("soft-DTW gamma must be finite and >= 0");
  if (a.length == 0 || b.length == 0) throw std::invalid_argument("soft-DTW needs nonempty series");
  if (dim == 0 || weights.size() != dim) throw std::invalid_argument("soft-DTW weights must match the dimension");
}

// Same ordering as the vector kernels: sort the three predecessors, shift by the smallest.
inline double soft_min3(double d, double u, double l, double gamma) {
  const double lo_ab = std::min(d, u);
  const double hi_ab = std::max(d, u);
  const double lo = std::min(lo_ab, l);
  if (gamma == 0.0) return lo;
  const double hi = std::max(hi_ab, l);
  const double mid = std::max(lo_ab, std::min(hi_ab, l));
  const double s = 1.0 + std::exp(-(mid - lo) / gamma) + std::exp(-(hi - lo) / gamma);
  return lo - gamma * std::log(s);
}

detail::LaneKernel kernel_for(Isa isa) {
  switch (isa) {
#if defined(CURIO_HAVE_AVX2)
    case Isa::Avx2: return &detail::soft_dtw_lanes_avx2;
#endif
#if defined(CURIO_HAVE_AVX512)
    case Isa::Avx512: return &detail::soft_dtw_lanes_avx512;
#endif
    default: return nullptr;
  }
}

}  // namespace

Isa active_isa() { return static_cast<Isa>(active_slot().load(std::memory_order_relaxed)); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument("ISA not available: " + std::string(isa_name(isa)));
  active_slot().store(static_cast<int>(isa), std::memory_order_relaxed);
}

double soft_dtw_reference(SeriesRef a, SeriesRef b, std::size_t dim, std::span<const double> weights,
                          double gamma) {
  check_inputs(a, b, dim, weights, gamma);
  const std::size_t n = a.length, m = b.length;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cur[0] = inf;
    const double* ai = a.data + i * dim;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data + j * dim;
      double cost = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = ai[d] - bj[d];
        cost += weights[d] * diff * diff;
      }
      cur[j + 1] = cost + soft_min3(prev[j], prev[j + 1], cur[j], gamma);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

void soft_dtw_batch(std::span<const PairTask> tasks, std::size_t dim, std::span<const double> weights, double gamma,
                    std::span<double> out, Isa isa) {
  if (out.size() != tasks.size()) throw std::invalid_argument("soft_dtw_batch: output size mismatch");
  for (const auto& t : tasks) check_inputs(t.a, t.b, dim, weights, gamma);

  const detail::LaneKernel kernel = isa_available(isa) ? kernel_for(isa) : nullptr;
  if (!kernel) {
    for (std::size_t k = 0; k < tasks.size(); ++k) out[k] = soft_dtw_reference(tasks[k].a, tasks[k].b, dim, weights, gamma);
    return;
  }

  const std::size_t W = lane_width(isa);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < tasks.size(); ++k) groups[{tasks[k].a.length, tasks[k].b.length}].push_back(k);

  std::vector<double> pa, pb, workspace, lane_out(W);
  for (const auto& [lengths, members] : groups) {
    const auto [n, m] = lengths;
    pa.assign(n * dim * W, 0.0);
    pb.assign(m * dim * W, 0.0);
    workspace.assign(2 * (m + 1) * W, 0.0);
    for (std::size_t start = 0; start < members.size(); start += W) {
      // the last group is padded by repeating its final task
      for (std::size_t lane = 0; lane < W; ++lane) {
        const PairTask& t = tasks[members[std::min(start + lane, members.size() - 1)]];
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t d = 0; d < dim; ++d) pa[(i * dim + d) * W + lane] = t.a.data[i * dim + d];
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t d = 0; d < dim; ++d) pb[(j * dim + d) * W + lane] = t.b.data[j * dim + d];
      }
      kernel(pa.data(), pb.data(), n, m, dim, weights.data(), gamma, workspace.data(), lane_out.data());
      for (std::size_t lane = 0; lane < W && start + lane < members.size(); ++lane) out[members[start + lane]] = lane_out[lane];
    }
  }
}

void soft_dtw_batch(std::span<const PairTask> tasks, std::size_t dim, std::span<const double> weights, double gamma,
                    std::span<double> out) {
  soft_dtw_batch(tasks, dim, weights, gamma, out, active_isa());
}

}  // namespace curio::simd
