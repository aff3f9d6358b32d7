#include "metacde/kernels.hpp"

#include <cmath>
#include <vector>

// AVX2+FMA lane. This TU is the only one compiled with -mavx2 -mfma, so no
// AVX2 instruction can leak into code that runs before the cpuid check.

#if defined(METACDE_BUILD_AVX2) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace metacde::kernels {
namespace {

// ---- vector exp ----------------------------------------------------------
// exp(x) = 2^k * exp(r), k = round(x/ln2), r = x - k*ln2 via a hi/lo split,
// exp(r) by a degree-13 Taylor polynomial (|r| <= ln2/2 keeps the truncation
// error near 1 ulp). 2^k is applied as two exponent-shift multiplies so
// results round correctly into the subnormal range.

const __m256d kLog2e = _mm256_set1_pd(1.4426950408889634074);
const __m256d kLn2Hi = _mm256_set1_pd(6.93147180369123816490e-01);
const __m256d kLn2Lo = _mm256_set1_pd(1.90821492927058770002e-10);

inline __m256d pow2i(__m256d k) {
  // k holds small integral values; build 2^k from the exponent field.
  __m128i ki32 = _mm256_cvtpd_epi32(k);
  __m256i ki = _mm256_cvtepi32_epi64(ki32);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d exp4(__m256d x) {
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d k = _mm256_round_pd(_mm256_mul_pd(x, kLog2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, kLn2Hi, x);
  r = _mm256_fnmadd_pd(k, kLn2Lo, r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, half);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^k = 2^floor(k/2) * 2^(k-floor(k/2)); both halves stay in the normal
  // exponent range for every k that survives the clamps below.
  __m256d k1 = _mm256_round_pd(_mm256_mul_pd(k, half),
                               _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
  __m256d k2 = _mm256_sub_pd(k, k1);
  __m256d res = _mm256_mul_pd(_mm256_mul_pd(p, pow2i(k1)), pow2i(k2));

  // Clamps: true exp overflows above 709.78..., is below half the smallest
  // subnormal under -746. NaN inputs pass through.
  const __m256d hi = _mm256_set1_pd(709.782712893384);
  const __m256d lo = _mm256_set1_pd(-746.0);
  res = _mm256_blendv_pd(res, _mm256_set1_pd(HUGE_VAL), _mm256_cmp_pd(x, hi, _CMP_GT_OQ));
  res = _mm256_blendv_pd(res, _mm256_setzero_pd(), _mm256_cmp_pd(x, lo, _CMP_LT_OQ));
  res = _mm256_blendv_pd(res, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return res;
}

// ---- vector tanh ---------------------------------------------------------
// |x| < 0.15: odd Taylor series through x^13 (truncation ~4e-15 relative).
// Otherwise (1-z)/(1+z) with z = exp(-2|x|); the crossover keeps 1-z free of
// cancellation. Large |x| needs no special case: z underflows to 0 -> 1.

inline __m256d tanh4(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d ax = _mm256_andnot_pd(sign_mask, x);
  __m256d sign = _mm256_and_pd(sign_mask, x);

  __m256d z = exp4(_mm256_mul_pd(ax, _mm256_set1_pd(-2.0)));
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d big = _mm256_div_pd(_mm256_sub_pd(one, z), _mm256_add_pd(one, z));
  big = _mm256_or_pd(big, sign);

  __m256d x2 = _mm256_mul_pd(x, x);
  __m256d q = _mm256_set1_pd(21844.0 / 6081075.0);
  q = _mm256_fmadd_pd(q, x2, _mm256_set1_pd(-1382.0 / 155925.0));
  q = _mm256_fmadd_pd(q, x2, _mm256_set1_pd(62.0 / 2835.0));
  q = _mm256_fmadd_pd(q, x2, _mm256_set1_pd(-17.0 / 315.0));
  q = _mm256_fmadd_pd(q, x2, _mm256_set1_pd(2.0 / 15.0));
  q = _mm256_fmadd_pd(q, x2, _mm256_set1_pd(-1.0 / 3.0));
  __m256d small = _mm256_fmadd_pd(_mm256_mul_pd(q, x2), x, x);

  __m256d pick_small = _mm256_cmp_pd(ax, _mm256_set1_pd(0.15), _CMP_LT_OQ);
  return _mm256_blendv_pd(big, small, pick_small);
}

// ---- elementwise ---------------------------------------------------------

void add_avx2(int n, const double* a, const double* b, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_avx2(int n, const double* a, const double* b, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_avx2(int n, const double* a, const double* b, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void scale_avx2(int n, double alpha, const double* a, double* out) {
  const __m256d va = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = alpha * a[i];
}
void axpy_avx2(int n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void tanh_avx2(int n, const double* x, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, tanh4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::tanh(x[i]);
}
void exp_avx2(int n, const double* x, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}
void sigmoid_avx2(int n, const double* x, double* out) {
  const __m256d one = _mm256_set1_pd(1.0);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d e = exp4(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_add_pd(one, e)));
  }
  for (; i < n; ++i) {
    const double v = x[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
}

// ---- reductions ----------------------------------------------------------

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double sum_avx2(int n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double max_avx2(int n, const double* x) {
  if (n < 4) {
    double m = x[0];
    for (int i = 1; i < n; ++i)
      if (x[i] > m) m = x[i];
    return m;
  }
  __m256d acc = _mm256_loadu_pd(x);
  int i = 4;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
  __m128d lo = _mm_max_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  double m = _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double sum_exp_shifted_avx2(int n, const double* x, double shift) {
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, exp4(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs)));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(x[i] - shift);
  return s;
}

// ---- gemm ----------------------------------------------------------------
// Row-major c[m x n] (+)= opA(a) * opB(b). 4x8 FMA microkernel over a B panel
// that is contiguous by rows; when opB is a transpose, B is packed once into
// a [k x n] scratch so the kernel sees the same layout either way. A is read
// via scalar broadcasts, which tolerate either storage order.

thread_local std::vector<double> g_pack;

void gemm_avx2(bool ta, bool tb, int m, int n, int k, const double* a,
               const double* b, double* c, bool accumulate) {
  const double* bp = b;
  if (tb) {  // b stored [n x k]; pack to [k x n]
    g_pack.resize(static_cast<size_t>(k) * n);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) g_pack[static_cast<size_t>(p) * n + j] = b[static_cast<size_t>(j) * k + p];
    bp = g_pack.data();
  }
  const int lda = ta ? m : k;
  auto aval = [&](int i, int p) { return ta ? a[static_cast<size_t>(p) * lda + i] : a[static_cast<size_t>(i) * lda + p]; };

  const int n8 = n - n % 8;
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    for (int j = 0; j < n8; j += 8) {
      __m256d c00, c01, c10, c11, c20, c21, c30, c31;
      if (accumulate) {
        c00 = _mm256_loadu_pd(c + (i + 0) * n + j);
        c01 = _mm256_loadu_pd(c + (i + 0) * n + j + 4);
        c10 = _mm256_loadu_pd(c + (i + 1) * n + j);
        c11 = _mm256_loadu_pd(c + (i + 1) * n + j + 4);
        c20 = _mm256_loadu_pd(c + (i + 2) * n + j);
        c21 = _mm256_loadu_pd(c + (i + 2) * n + j + 4);
        c30 = _mm256_loadu_pd(c + (i + 3) * n + j);
        c31 = _mm256_loadu_pd(c + (i + 3) * n + j + 4);
      } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
      }
      for (int p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(bp + static_cast<size_t>(p) * n + j);
        const __m256d b1 = _mm256_loadu_pd(bp + static_cast<size_t>(p) * n + j + 4);
        __m256d av = _mm256_set1_pd(aval(i + 0, p));
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_set1_pd(aval(i + 1, p));
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_set1_pd(aval(i + 2, p));
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_set1_pd(aval(i + 3, p));
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      _mm256_storeu_pd(c + (i + 0) * n + j, c00);
      _mm256_storeu_pd(c + (i + 0) * n + j + 4, c01);
      _mm256_storeu_pd(c + (i + 1) * n + j, c10);
      _mm256_storeu_pd(c + (i + 1) * n + j + 4, c11);
      _mm256_storeu_pd(c + (i + 2) * n + j, c20);
      _mm256_storeu_pd(c + (i + 2) * n + j + 4, c21);
      _mm256_storeu_pd(c + (i + 3) * n + j, c30);
      _mm256_storeu_pd(c + (i + 3) * n + j + 4, c31);
    }
  }
  const int m4 = i;
  // leftover rows, full-width columns
  for (; i < m; ++i) {
    for (int j = 0; j < n8; j += 8) {
      __m256d c0, c1;
      if (accumulate) {
        c0 = _mm256_loadu_pd(c + static_cast<size_t>(i) * n + j);
        c1 = _mm256_loadu_pd(c + static_cast<size_t>(i) * n + j + 4);
      } else {
        c0 = c1 = _mm256_setzero_pd();
      }
      for (int p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(aval(i, p));
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + static_cast<size_t>(p) * n + j), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + static_cast<size_t>(p) * n + j + 4), c1);
      }
      _mm256_storeu_pd(c + static_cast<size_t>(i) * n + j, c0);
      _mm256_storeu_pd(c + static_cast<size_t>(i) * n + j + 4, c1);
    }
  }
  // leftover columns, all rows
  if (n8 < n) {
    for (int r = 0; r < m; ++r) {
      for (int j = n8; j < n; ++j) {
        double acc = accumulate ? c[static_cast<size_t>(r) * n + j] : 0.0;
        for (int p = 0; p < k; ++p) acc += aval(r, p) * bp[static_cast<size_t>(p) * n + j];
        c[static_cast<size_t>(r) * n + j] = acc;
      }
    }
  }
  (void)m4;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t = [] {
    KernelTable k = scalar_table();  // softplus stays scalar: cold path, log1p dominated
    k.gemm = gemm_avx2;
    k.add = add_avx2;
    k.sub = sub_avx2;
    k.mul = mul_avx2;
    k.scale = scale_avx2;
    k.axpy = axpy_avx2;
    k.tanh = tanh_avx2;
    k.exp = exp_avx2;
    k.sigmoid = sigmoid_avx2;
    k.sum = sum_avx2;
    k.max = max_avx2;
    k.sum_exp_shifted = sum_exp_shifted_avx2;
    k.name = "avx2";
    return k;
  }();
  return t;
}

bool avx2_lane_compiled() { return true; }

}  // namespace metacde::kernels

#else  // lane not compiled: alias to the scalar table

namespace metacde::kernels {
const KernelTable& avx2_table() { return scalar_table(); }
bool avx2_lane_compiled() { return false; }
}  // namespace metacde::kernels

#endif
