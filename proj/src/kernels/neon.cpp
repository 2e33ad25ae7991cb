// SPDX-License-Identifier: Apache-2.0
#include "kernels_internal.hpp"

#if MOSAE_KERNELS_NEON

#include <arm_neon.h>

namespace mosae::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* w, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_neon(w + r * cols, x, cols);
    y[r] = bias ? s + bias[r] : s;
  }
}

void gemv_t_acc_neon(const double* w, std::size_t rows, std::size_t cols, const double* d,
                     double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (d[r] != 0.0) axpy_neon(d[r], w + r * cols, out, cols);
  }
}

double sq_dist_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t e = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, e, e);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

constexpr KernelTable kNeon{Isa::neon, dot_neon, axpy_neon, gemv_neon, gemv_t_acc_neon,
                            sq_dist_neon};

}  // namespace

const KernelTable* neon_table() noexcept { return &kNeon; }

}  // namespace mosae::kernels

#endif  // MOSAE_KERNELS_NEON
