// Built with -mavx2 -mfma; only called after a runtime CPU check.

#include <immintrin.h>

#include "kernels.hpp"

namespace curio::simd::detail {
namespace {

struct Avx2 {
  using reg = __m256d;
  using mask = __m256d;
  static constexpr std::size_t width = 4;

  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg set1(double x) { return _mm256_set1_pd(x); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static reg div(reg a, reg b) { return _mm256_div_pd(a, b); }
  static reg min(reg a, reg b) { return _mm256_min_pd(a, b); }
  static reg max(reg a, reg b) { return _mm256_max_pd(a, b); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg fnmadd(reg a, reg b, reg c) { return _mm256_fnmadd_pd(a, b, c); }
  static reg round(reg a) { return _mm256_round_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC); }
  static mask gt(reg a, reg b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
  static reg select(mask m, reg if_true, reg if_false) { return _mm256_blendv_pd(if_false, if_true, m); }

  // 2^n for integral n in [-1022, 1023]
  static reg pow2n(reg n) {
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
    __m256i bits = _mm256_castpd_si256(_mm256_add_pd(n, magic));
    bits = _mm256_sub_epi64(bits, _mm256_castpd_si256(magic));
    bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
    return _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
  }

  // x = 2^e * f with f in [1, 2); positive normal x only
  static reg frexp1(reg x, reg& f) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i mant = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                         _mm256_set1_epi64x(0x3FF0000000000000LL));
    f = _mm256_castsi256_pd(mant);
    const __m256i e = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);
    return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(e, _mm256_castpd_si256(magic))), magic);
  }
};

}  // namespace
}  // namespace curio::simd::detail

#include "soft_dtw_lanes.inl"

namespace curio::simd::detail {

void soft_dtw_lanes_avx2(const double* a, const double* b, std::size_t n, std::size_t m, std::size_t dim,
                         const double* weights, double gamma, double* workspace, double* out) {
  if (gamma == 0.0)
    soft_dtw_lanes<Avx2, true>(a, b, n, m, dim, weights, gamma, workspace, out);
  else
    soft_dtw_lanes<Avx2, false>(a, b, n, m, dim, weights, gamma, workspace, out);
}

}  // namespace curio::simd::detail
