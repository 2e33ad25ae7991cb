// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA kernels. Functions carry a target attribute instead of the TU
// being built with -mavx2, so no inline code from shared headers gets
// compiled for AVX2 and leaks into the scalar path.
#include "kernels_internal.hpp"

#if MOSAE_KERNELS_X86

#include <immintrin.h>

#define MOSAE_AVX2 __attribute__((target("avx2,fma")))

namespace mosae::kernels {
namespace {

MOSAE_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

MOSAE_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

MOSAE_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

MOSAE_AVX2 void gemv_avx2(const double* w, std::size_t rows, std::size_t cols, const double* x,
                          const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_avx2(w + r * cols, x, cols);
    y[r] = bias ? s + bias[r] : s;
  }
}

MOSAE_AVX2 void gemv_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                                const double* d, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (d[r] != 0.0) axpy_avx2(d[r], w + r * cols, out, cols);
  }
}

MOSAE_AVX2 double sq_dist_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(e, e, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

constexpr KernelTable kAvx2{Isa::avx2, dot_avx2, axpy_avx2, gemv_avx2, gemv_t_acc_avx2,
                            sq_dist_avx2};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace mosae::kernels

#endif  // MOSAE_KERNELS_X86
