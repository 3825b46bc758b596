// Built with -mavx512f -mavx2 -mfma; only called after a runtime CPU check.

#include <immintrin.h>

#include "kernels.hpp"

namespace curio::simd::detail {
namespace {

struct Avx512 {
  using reg = __m512d;
  using mask = __mmask8;
  static constexpr std::size_t width = 8;

  static reg load(const double* p) { return _mm512_loadu_pd(p); }
  static void store(double* p, reg v) { _mm512_storeu_pd(p, v); }
  static reg set1(double x) { return _mm512_set1_pd(x); }
  static reg add(reg a, reg b) { return _mm512_add_pd(a, b); }
  static reg sub(reg a, reg b) { return _mm512_sub_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm512_mul_pd(a, b); }
  static reg div(reg a, reg b) { return _mm512_div_pd(a, b); }
  static reg min(reg a, reg b) { return _mm512_min_pd(a, b); }
  static reg max(reg a, reg b) { return _mm512_max_pd(a, b); }
  static reg fmadd(reg a, reg b, reg c) { return _mm512_fmadd_pd(a, b, c); }
  static reg fnmadd(reg a, reg b, reg c) { return _mm512_fnmadd_pd(a, b, c); }
  static reg round(reg a) { return _mm512_roundscale_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC); }
  static mask gt(reg a, reg b) { return _mm512_cmp_pd_mask(a, b, _CMP_GT_OQ); }
  static reg select(mask m, reg if_true, reg if_false) { return _mm512_mask_blend_pd(m, if_false, if_true); }

  static reg pow2n(reg n) {
    const __m512d magic = _mm512_set1_pd(6755399441055744.0);
    __m512i bits = _mm512_castpd_si512(_mm512_add_pd(n, magic));
    bits = _mm512_sub_epi64(bits, _mm512_castpd_si512(magic));
    bits = _mm512_add_epi64(bits, _mm512_set1_epi64(1023));
    return _mm512_castsi512_pd(_mm512_slli_epi64(bits, 52));
  }

  static reg frexp1(reg x, reg& f) {
    const __m512i bits = _mm512_castpd_si512(x);
    const __m512i mant = _mm512_or_si512(_mm512_and_si512(bits, _mm512_set1_epi64(0x000FFFFFFFFFFFFFLL)),
                                         _mm512_set1_epi64(0x3FF0000000000000LL));
    f = _mm512_castsi512_pd(mant);
    const __m512i e = _mm512_sub_epi64(_mm512_srli_epi64(bits, 52), _mm512_set1_epi64(1023));
    const __m512d magic = _mm512_set1_pd(6755399441055744.0);
    return _mm512_sub_pd(_mm512_castsi512_pd(_mm512_add_epi64(e, _mm512_castpd_si512(magic))), magic);
  }
};

}  // namespace
}  // namespace curio::simd::detail

#include "soft_dtw_lanes.inl"

namespace curio::simd::detail {

void soft_dtw_lanes_avx512(const double* a, const double* b, std::size_t n, std::size_t m, std::size_t dim,
                           const double* weights, double gamma, double* workspace, double* out) {
  if (gamma == 0.0)
    soft_dtw_lanes<Avx512, true>(a, b, n, m, dim, weights, gamma, workspace, out);
  else
    soft_dtw_lanes<Avx512, false>(a, b, n, m, dim, weights, gamma, workspace, out);
}

}  // namespace curio::simd::detail
