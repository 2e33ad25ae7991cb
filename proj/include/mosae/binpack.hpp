// SPDX-License-Identifier: Apache-2.0
//
// Equal-width binning codec for model updates and its wire format.
//
// Wire format, little-endian:
//   "MOSU" | u8 version (1) | u32 matrix count
//   per matrix: u32 rows | u32 cols | u32 density | f64 base | f64 step |
//               rows*cols indices, ceil(log2 density) bits each, MSB-first,
//               zero-padded to a byte boundary
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mosae/linalg.hpp"

namespace mosae::binpack {

inline constexpr std::uint8_t kWireVersion = 1;

struct BinningParams {
  double base = 0.0;
  double step = 0.0;
  std::uint32_t density = 2;

  bool operator==(const BinningParams&) const = default;
};

struct PackedMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  BinningParams params;
  std::vector<std::uint32_t> indices;  // row-major

  bool operator==(const PackedMatrix&) const = default;
};

/// Bits per index on the wire.
unsigned index_bits(std::uint32_t density);

PackedMatrix bin_encode(const Matrix& m, std::uint32_t density);

/// Bin centers: base + (index + 0.5) * step; base everywhere when step is 0.
Matrix bin_decode(const PackedMatrix& p);

/// ((log2(d) / 8) * n + 16) / (8 * n), with exact log2.
double compression_rate(std::uint32_t density, std::size_t n);

std::size_t payload_size(std::span<const PackedMatrix> matrices);
std::vector<std::uint8_t> pack_payload(std::span<const PackedMatrix> matrices);
/// Throws FormatError with a kind distinguishing bad magic, unsupported
/// version, truncation and out-of-range indices.
std::vector<PackedMatrix> unpack_payload(std::span<const std::uint8_t> bytes);

struct ErrorBoundReport {
  double norm_dA = 0.0;
  double norm_x_plus_dx = 0.0;
  double norm_dx = 0.0;
  double norm_A = 0.0;
  double lhs = 0.0;   // (|dx| |A|) / (|x + dx| |dA|)
  double cond = 0.0;  // |A| |A^-1|
  bool holds = false;
};

/// Perturbs A by its own binning error, solves (A + dA)(x + dx) = A x and
/// checks the relative-error bound with spectral / Euclidean norms.
ErrorBoundReport verify_error_bound(const Matrix& a, std::uint32_t density, const Vector& x);

}  // namespace mosae::binpack
