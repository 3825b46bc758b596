#pragma once

#include <cstddef>

namespace curio::simd::detail {

// Lane-interleaved inputs: a[(i * dim + d) * W + lane], b likewise. `workspace` holds
// 2 * (m + 1) * W doubles. Writes W results.
using LaneKernel = void (*)(const double* a, const double* b, std::size_t n, std::size_t m, std::size_t dim,
                            const double* weights, double gamma, double* workspace, double* out);

#if defined(CURIO_HAVE_AVX2)
void soft_dtw_lanes_avx2(const double* a, const double* b, std::size_t n, std::size_t m, std::size_t dim,
                         const double* weights, double gamma, double* workspace, double* out);
#endif
#if defined(CURIO_HAVE_AVX512)
void soft_dtw_lanes_avx512(const double* a, const double* b, std::size_t n, std::size_t m, std::size_t dim,
                           const double* weights, double gamma, double* workspace, double* out);
#endif

}  // namespace curio::simd::detail
