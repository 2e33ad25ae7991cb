// SPDX-License-Identifier: Apache-2.0
#include "mosae/kernels.hpp"

namespace mosae::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_scalar(w + r * cols, x, cols);
    y[r] = bias ? s + bias[r] : s;
  }
}

void gemv_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols, const double* d,
                       double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (d[r] != 0.0) axpy_scalar(d[r], w + r * cols, out, cols);
  }
}

double sq_dist_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

constexpr KernelTable kScalar{Isa::scalar, dot_scalar, axpy_scalar, gemv_scalar,
                              gemv_t_acc_scalar, sq_dist_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace mosae::kernels
