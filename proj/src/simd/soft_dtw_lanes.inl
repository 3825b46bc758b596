// Lane-parallel soft-DTW body shared by the vector ISAs. Include after defining a vector
// wrapper `V` with: reg, width, load, store, set1, add, sub, mul, div, min, max, fmadd,
// fnmadd, round, gt, select, pow2n, frexp1 (exponent as double, mantissa in [1, 2)).
//
// exp and log are evaluated over the narrow domains the soft-min needs: exp on [-700, 0],
// log on [1, 3]. Both are accurate to a few ulp.

// No standard-library templates are instantiated here: this file is compiled with ISA
// flags, and a COMDAT copy of such code could leak into baseline translation units.

namespace curio::simd::detail {
namespace {

template <class V>
struct VMath {
  using reg = typename V::reg;

  static reg exp_nonpositive(reg t) {
    const reg ln2_hi = V::set1(6.93145751953125e-1);
    const reg ln2_lo = V::set1(1.42860682030941723212e-6);
    t = V::max(t, V::set1(-700.0));
    const reg n = V::round(V::mul(t, V::set1(1.4426950408889634074)));
    reg r = V::fnmadd(n, ln2_hi, t);
    r = V::fnmadd(n, ln2_lo, r);
    // Taylor series to r^13; |r| <= ln2/2 keeps the truncation below 1e-17.
    reg p = V::set1(1.0 / 6227020800.0);
    p = V::fmadd(p, r, V::set1(1.0 / 479001600.0));
    p = V::fmadd(p, r, V::set1(1.0 / 39916800.0));
    p = V::fmadd(p, r, V::set1(1.0 / 3628800.0));
    p = V::fmadd(p, r, V::set1(1.0 / 362880.0));
    p = V::fmadd(p, r, V::set1(1.0 / 40320.0));
    p = V::fmadd(p, r, V::set1(1.0 / 5040.0));
    p = V::fmadd(p, r, V::set1(1.0 / 720.0));
    p = V::fmadd(p, r, V::set1(1.0 / 120.0));
    p = V::fmadd(p, r, V::set1(1.0 / 24.0));
    p = V::fmadd(p, r, V::set1(1.0 / 6.0));
    p = V::fmadd(p, r, V::set1(0.5));
    p = V::fmadd(p, r, V::set1(1.0));
    p = V::fmadd(p, r, V::set1(1.0));
    return V::mul(p, V::pow2n(n));
  }

  static reg log_positive(reg s) {
    const reg one = V::set1(1.0);
    const reg ln2_hi = V::set1(6.93145751953125e-1);
    const reg ln2_lo = V::set1(1.42860682030941723212e-6);
    reg f;
    reg e = V::frexp1(s, f);
    const auto big = V::gt(f, V::set1(1.41421356237309504880));
    f = V::select(big, V::mul(f, V::set1(0.5)), f);
    e = V::select(big, V::add(e, one), e);
    // log f = 2 atanh(z), z = (f-1)/(f+1), |z| <= 0.1716
    const reg z = V::div(V::sub(f, one), V::add(f, one));
    const reg w = V::mul(z, z);
    reg p = V::set1(1.0 / 21.0);
    p = V::fmadd(p, w, V::set1(1.0 / 19.0));
    p = V::fmadd(p, w, V::set1(1.0 / 17.0));
    p = V::fmadd(p, w, V::set1(1.0 / 15.0));
    p = V::fmadd(p, w, V::set1(1.0 / 13.0));
    p = V::fmadd(p, w, V::set1(1.0 / 11.0));
    p = V::fmadd(p, w, V::set1(1.0 / 9.0));
    p = V::fmadd(p, w, V::set1(1.0 / 7.0));
    p = V::fmadd(p, w, V::set1(1.0 / 5.0));
    p = V::fmadd(p, w, V::set1(1.0 / 3.0));
    const reg z2 = V::add(z, z);
    const reg log_f = V::fmadd(V::mul(z2, w), p, z2);
    return V::fmadd(e, ln2_hi, V::fmadd(e, ln2_lo, log_f));
  }
};

template <class V, bool kHardMin>
void soft_dtw_lanes(const double* a, const double* b, std::size_t n, std::size_t m, std::size_t dim,
                    const double* weights, double gamma, double* workspace, double* out) {
  using reg = typename V::reg;
  constexpr std::size_t W = V::width;
  const reg inf = V::set1(__builtin_inf());
  double* prev = workspace;
  double* cur = workspace + (m + 1) * W;
  for (std::size_t j = 0; j <= m; ++j) V::store(prev + j * W, inf);
  V::store(prev, V::set1(0.0));  // R[0][0]

  const reg neg_inv_gamma = V::set1(kHardMin ? 0.0 : -1.0 / gamma);
  const reg gam = V::set1(gamma);
  const reg one = V::set1(1.0);

  for (std::size_t i = 0; i < n; ++i) {
    V::store(cur, inf);  // R[i+1][0]
    const double* ai = a + i * dim * W;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b + j * dim * W;
      reg cost = V::set1(0.0);
      for (std::size_t d = 0; d < dim; ++d) {
        const reg diff = V::sub(V::load(ai + d * W), V::load(bj + d * W));
        cost = V::fmadd(V::mul(V::set1(weights[d]), diff), diff, cost);
      }
      const reg r_diag = V::load(prev + j * W);
      const reg r_up = V::load(prev + (j + 1) * W);
      const reg r_left = V::load(cur + j * W);
      const reg lo_ab = V::min(r_diag, r_up);
      const reg hi_ab = V::max(r_diag, r_up);
      const reg lo = V::min(lo_ab, r_left);
      reg value;
      if constexpr (kHardMin) {
        value = lo;
      } else {
        const reg hi = V::max(hi_ab, r_left);
        const reg mid = V::max(lo_ab, V::min(hi_ab, r_left));
        const reg e_mid = VMath<V>::exp_nonpositive(V::mul(V::sub(mid, lo), neg_inv_gamma));
        const reg e_hi = VMath<V>::exp_nonpositive(V::mul(V::sub(hi, lo), neg_inv_gamma));
        const reg sum = V::add(V::add(one, e_mid), e_hi);
        value = V::fnmadd(gam, VMath<V>::log_positive(sum), lo);
      }
      V::store(cur + (j + 1) * W, V::add(cost, value));
    }
    double* t = prev;
    prev = cur;
    cur = t;
  }
  V::store(out, V::load(prev + m * W));
}

}  // namespace
}  // namespace curio::simd::detail
