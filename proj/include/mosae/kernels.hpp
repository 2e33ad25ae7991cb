// SPDX-License-Identifier: Apache-2.0
//
// Dense float64 inner loops used by the autoencoder and the linear algebra
// substrate. Every kernel has a scalar reference implementation; vector
// variants (AVX2+FMA on x86-64, NEON on AArch64) are selected once at
// runtime from CPU feature detection. Variants agree with the reference up
// to floating-point reassociation, never bit-for-bit.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace mosae::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + bias, W row-major rows x cols; bias may be null
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y);
  // out += W^T d, W row-major rows x cols, d has `rows` entries
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols, const double* d,
                     double* out);
  // sum_i (a[i] - b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// Vector table for `isa`, or nullptr when it was not compiled in or the CPU lacks it.
const KernelTable* table_for(Isa isa) noexcept;

/// Best ISA supported by this CPU and build. `MOSAE_ISA=scalar` in the
/// environment pins the reference path.
Isa detect_isa() noexcept;

/// Table used by the library; resolved from detect_isa() on first call.
const KernelTable& active() noexcept;

/// Overrides the active table (tests, benchmarking). Returns false if `isa` is unavailable.
bool force_isa(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) noexcept {
  return active().sq_dist(a.data(), b.data(), a.size());
}

}  // namespace mosae::kernels
