#pragma once

// Soft-DTW kernels. The scalar routine is the reference; the vector kernels run one
// series pair per lane (all pairs in a lane group share their lengths) and are selected
// at runtime from the CPU's capabilities.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace curio::simd {

enum class Isa : std::uint8_t { Scalar, Avx2, Avx512 };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);
/// Compiled in and supported by the running CPU.
bool isa_available(Isa isa);
std::size_t lane_width(Isa isa);

/// Best available ISA, unless CURIO_SIMD=scalar|avx2|avx512 asks for another one.
Isa detect_isa();
/// ISA used by `soft_dtw_batch` when none is passed explicitly.
Isa active_isa();
void set_active_isa(Isa isa);

/// Row-major `length x dim` series.
struct SeriesRef {
  const double* data = nullptr;
  std::size_t length = 0;
};

struct PairTask {
  SeriesRef a;
  SeriesRef b;
};

/// Frame cost is sum_d weights[d] * (a_d - b_d)^2. gamma == 0 gives classic DTW.
double soft_dtw_reference(SeriesRef a, SeriesRef b, std::size_t dim, std::span<const double> weights,
                          double gamma);

/// Evaluates every task. Each task's result depends only on the task itself, never on how
/// tasks are grouped into lanes.
void soft_dtw_batch(std::span<const PairTask> tasks, std::size_t dim, std::span<const double> weights,
                    double gamma, std::span<double> out, Isa isa);
void soft_dtw_batch(std::span<const PairTask> tasks, std::size_t dim, std::span<const double> weights,
                    double gamma, std::span<double> out);

}  // namespace curio::simd
