// Compiled with -mavx2 -mfma. Nothing in this file may run unless
// cpu_supports(Isa::avx2) returned true.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "edgesim/kernels.hpp"

namespace edgesim::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// 4 rows x 8 columns register tile.
inline void tile_4x8(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                     const double* bias, double* c, std::size_t ldc, std::size_t k) {
  __m256d c00, c01, c10, c11, c20, c21, c30, c31;
  if (bias != nullptr) {
    c00 = c10 = c20 = c30 = _mm256_loadu_pd(bias);
    c01 = c11 = c21 = c31 = _mm256_loadu_pd(bias + 4);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
  }
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a + lda + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

// 1 row x 8 columns.
inline void tile_1x8(const double* a, const double* b, std::size_t ldb, const double* bias,
                     double* c, std::size_t k) {
  __m256d c0 = bias != nullptr ? _mm256_loadu_pd(bias) : _mm256_setzero_pd();
  __m256d c1 = bias != nullptr ? _mm256_loadu_pd(bias + 4) : _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * ldb), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * ldb + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

void gemm_avx2(const double* a, const double* b, const double* bias, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  // Column blocks of B stay in L1 while every row of A streams past them.
  constexpr std::size_t kColBlock = 64;
  const std::size_t n8 = n - n % 8;
  for (std::size_t j0 = 0; j0 < n8; j0 += kColBlock) {
    const std::size_t j1 = std::min(j0 + kColBlock, n8);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      for (std::size_t j = j0; j < j1; j += 8) {
        tile_4x8(a + i * k, k, b + j, n, bias != nullptr ? bias + j : nullptr, c + i * n + j, n,
                 k);
      }
    }
    for (; i < m; ++i) {
      for (std::size_t j = j0; j < j1; j += 8) {
        tile_1x8(a + i * k, b + j, n, bias != nullptr ? bias + j : nullptr, c + i * n + j, k);
      }
    }
  }
  if (n8 < n) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = n8; j < n; ++j) {
        double s = bias != nullptr ? bias[j] : 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
        c[i * n + j] = s;
      }
    }
  }
}

void gemm_rowmax_avx2(const double* a, const double* b, const double* bias, double* out,
                      std::size_t m, std::size_t k, std::size_t n) {
  constexpr std::size_t kColBlock = 64;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::fill(out, out + m, neg_inf);
  const std::size_t n8 = n - n % 8;
  const __m256d zero = _mm256_setzero_pd();
  for (std::size_t j0 = 0; j0 < n8; j0 += kColBlock) {
    const std::size_t j1 = std::min(j0 + kColBlock, n8);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      const double* a0 = a + i * k;
      const double* a1 = a0 + k;
      const double* a2 = a1 + k;
      const double* a3 = a2 + k;
      __m256d m0 = _mm256_set1_pd(neg_inf);
      __m256d m1 = m0;
      __m256d m2 = m0;
      __m256d m3 = m0;
      for (std::size_t j = j0; j < j1; j += 8) {
        __m256d c00, c01, c10, c11, c20, c21, c30, c31;
        if (bias != nullptr) {
          c00 = c10 = c20 = c30 = _mm256_loadu_pd(bias + j);
          c01 = c11 = c21 = c31 = _mm256_loadu_pd(bias + j + 4);
        } else {
          c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = zero;
        }
        for (std::size_t p = 0; p < k; ++p) {
          const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
          const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
          __m256d av = _mm256_broadcast_sd(a0 + p);
          c00 = _mm256_fmadd_pd(av, b0, c00);
          c01 = _mm256_fmadd_pd(av, b1, c01);
          av = _mm256_broadcast_sd(a1 + p);
          c10 = _mm256_fmadd_pd(av, b0, c10);
          c11 = _mm256_fmadd_pd(av, b1, c11);
          av = _mm256_broadcast_sd(a2 + p);
          c20 = _mm256_fmadd_pd(av, b0, c20);
          c21 = _mm256_fmadd_pd(av, b1, c21);
          av = _mm256_broadcast_sd(a3 + p);
          c30 = _mm256_fmadd_pd(av, b0, c30);
          c31 = _mm256_fmadd_pd(av, b1, c31);
        }
        m0 = _mm256_max_pd(m0, _mm256_max_pd(c00, c01));
        m1 = _mm256_max_pd(m1, _mm256_max_pd(c10, c11));
        m2 = _mm256_max_pd(m2, _mm256_max_pd(c20, c21));
        m3 = _mm256_max_pd(m3, _mm256_max_pd(c30, c31));
      }
      out[i] = std::max(out[i], hmax(m0));
      out[i + 1] = std::max(out[i + 1], hmax(m1));
      out[i + 2] = std::max(out[i + 2], hmax(m2));
      out[i + 3] = std::max(out[i + 3], hmax(m3));
    }
    for (; i < m; ++i) {
      alignas(32) double tile[8];
      __m256d mx = _mm256_set1_pd(neg_inf);
      for (std::size_t j = j0; j < j1; j += 8) {
        tile_1x8(a + i * k, b + j, n, bias != nullptr ? bias + j : nullptr, tile, k);
        mx = _mm256_max_pd(mx, _mm256_max_pd(_mm256_load_pd(tile), _mm256_load_pd(tile + 4)));
      }
      out[i] = std::max(out[i], hmax(mx));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = n8; j < n; ++j) {
      double s = bias != nullptr ? bias[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      out[i] = std::max(out[i], s);
    }
  }
}

void relu_avx2(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double max_avx2(const double* x, std::size_t n) {
  if (n < 4) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
  }
  __m256d acc = _mm256_loadu_pd(x);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
  double m = hmax(acc);
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

void minmax_avx2(const double* x, std::size_t n, double* lo, double* hi) {
  if (n < 4) {
    double a = x[0];
    double b = x[0];
    for (std::size_t i = 1; i < n; ++i) {
      a = x[i] < a ? x[i] : a;
      b = x[i] > b ? x[i] : b;
    }
    *lo = a;
    *hi = b;
    return;
  }
  __m256d vlo = _mm256_loadu_pd(x);
  __m256d vhi = vlo;
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    vlo = _mm256_min_pd(vlo, v);
    vhi = _mm256_max_pd(vhi, v);
  }
  double a = hmin(vlo);
  double b = hmax(vhi);
  for (; i < n; ++i) {
    a = x[i] < a ? x[i] : a;
    b = x[i] > b ? x[i] : b;
  }
  *lo = a;
  *hi = b;
}

void mul_avx2(const double* s, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(s + i)));
  }
  for (; i < n; ++i) y[i] *= s[i];
}

void scale_avx2(double alpha, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
  for (; i < n; ++i) y[i] *= alpha;
}

// Separate multiply and add (no FMA) so the result is bit-identical to the
// scalar reference.
void adam_avx2(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamStep& st) {
  const __m256d b1 = _mm256_set1_pd(st.beta1);
  const __m256d b2 = _mm256_set1_pd(st.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - st.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - st.beta2);
  const __m256d bc1 = _mm256_set1_pd(st.bias_corr1);
  const __m256d bc2 = _mm256_set1_pd(st.bias_corr2);
  const __m256d lr = _mm256_set1_pd(st.lr);
  const __m256d eps = _mm256_set1_pd(st.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi =
        _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bc1);
    const __m256d vhat = _mm256_div_pd(vi, bc2);
    const __m256d upd =
        _mm256_mul_pd(lr, _mm256_div_pd(mhat, _mm256_add_pd(_mm256_sqrt_pd(vhat), eps)));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    const double mi = st.beta1 * m[i] + (1.0 - st.beta1) * g;
    const double vi = st.beta2 * v[i] + (1.0 - st.beta2) * (g * g);
    m[i] = mi;
    v[i] = vi;
    param[i] -= st.lr * ((mi / st.bias_corr1) / (std::sqrt(vi / st.bias_corr2) + st.eps));
  }
}

// Half-away-from-zero rounding without the floor(x + 0.5) double-rounding
// trap: truncate, then step away from zero when the remainder is >= 0.5.
// Matches std::round bit for bit.
inline __m256d round_half_away(__m256d x) {
  const __m256d t = _mm256_round_pd(x, _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d frac = _mm256_andnot_pd(sign_mask, _mm256_sub_pd(x, t));
  const __m256d step_mask = _mm256_cmp_pd(frac, _mm256_set1_pd(0.5), _CMP_GE_OQ);
  const __m256d one = _mm256_or_pd(_mm256_set1_pd(1.0), _mm256_and_pd(sign_mask, x));
  return _mm256_add_pd(t, _mm256_and_pd(step_mask, one));
}

void quantize_avx2(const double* x, std::size_t n, double inv_scale, int zero_point,
                   std::uint8_t* codes) {
  const __m256d vs = _mm256_set1_pd(inv_scale);
  const __m256d vz = _mm256_set1_pd(static_cast<double>(zero_point));
  const __m256d lo = _mm256_setzero_pd();
  const __m256d hi = _mm256_set1_pd(255.0);
  alignas(16) std::int32_t tmp[4];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d q = _mm256_add_pd(round_half_away(_mm256_mul_pd(_mm256_loadu_pd(x + i), vs)), vz);
    q = _mm256_min_pd(_mm256_max_pd(q, lo), hi);
    _mm_store_si128(reinterpret_cast<__m128i*>(tmp), _mm256_cvttpd_epi32(q));
    codes[i] = static_cast<std::uint8_t>(tmp[0]);
    codes[i + 1] = static_cast<std::uint8_t>(tmp[1]);
    codes[i + 2] = static_cast<std::uint8_t>(tmp[2]);
    codes[i + 3] = static_cast<std::uint8_t>(tmp[3]);
  }
  for (; i < n; ++i) {
    double q = std::round(x[i] * inv_scale) + static_cast<double>(zero_point);
    q = std::clamp(q, 0.0, 255.0);
    codes[i] = static_cast<std::uint8_t>(q);
  }
}

void dequantize_avx2(const std::uint8_t* codes, std::size_t n, int zero_point, double scale,
                     double* x) {
  const __m128i vz = _mm_set1_epi32(zero_point);
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::int32_t raw;
    std::copy(codes + i, codes + i + 4, reinterpret_cast<std::uint8_t*>(&raw));
    const __m128i c32 = _mm_sub_epi32(_mm_cvtepu8_epi32(_mm_cvtsi32_si128(raw)), vz);
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_cvtepi32_pd(c32), vs));
  }
  for (; i < n; ++i) {
    x[i] = static_cast<double>(static_cast<int>(codes[i]) - zero_point) * scale;
  }
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{
      Isa::avx2,   dot_avx2,     axpy_avx2,  gemm_avx2,     gemm_rowmax_avx2, relu_avx2,
      sum_avx2,    max_avx2,     minmax_avx2, mul_avx2,     scale_avx2,
      adam_avx2,   quantize_avx2, dequantize_avx2,
  };
  return table;
}

}  // namespace edgesim::kernels
