// SPDX-License-Identifier: Apache-2.0
#include "mosae/binpack.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <span>

#include "mosae/bytes.hpp"
#include "mosae/error.hpp"

namespace mosae::binpack {
namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'O', 'S', 'U'};

double center(double base, double step, std::uint32_t i) {
  return base + (static_cast<double>(i) + 0.5) * step;
}

std::uint64_t index_bytes(std::uint64_t n, unsigned bits) { return (n * bits + 7) / 8; }

// Returns false if some value ends up farther than half a bin from its center.
bool assign_indices(std::span<const double> v, PackedMatrix& p) {
  const double base = p.params.base;
  const double step = p.params.step;
  const std::uint32_t density = p.params.density;
  const double half = step / 2.0;
  bool ok = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = std::floor((v[i] - base) / step);
    auto idx = static_cast<std::uint32_t>(std::clamp(t, 0.0, static_cast<double>(density - 1)));
    // Rounding can put a value sitting on a bin edge one bin off.
    if (std::abs(center(base, step, idx) - v[i]) > half) {
      for (std::uint32_t cand : {idx - 1, idx + 1}) {
        if (cand < density && std::abs(center(base, step, cand) - v[i]) < std::abs(center(base, step, idx) - v[i])) {
          idx = cand;
        }
      }
      ok = ok && std::abs(center(base, step, idx) - v[i]) <= half;
    }
    p.indices[i] = idx;
  }
  return ok;
}

}  // namespace

unsigned index_bits(std::uint32_t density) {
  if (density < 2) throw ContractError("bin density must be >= 2");
  return static_cast<unsigned>(std::bit_width(density - 1));
}

PackedMatrix bin_encode(const Matrix& m, std::uint32_t density) {
  if (density < 2) throw ContractError("bin_encode: density must be >= 2");
  const auto v = m.span();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  PackedMatrix p;
  p.rows = static_cast<std::uint32_t>(m.rows());
  p.cols = static_cast<std::uint32_t>(m.cols());
  p.params.base = *lo;
  p.params.density = density;
  p.params.step = (*hi - *lo) / static_cast<double>(density);
  if (!std::isfinite(p.params.step)) throw ContractError("bin_encode: value range overflows");
  p.indices.assign(v.size(), 0);
  if (p.params.step == 0.0) return p;

  // The range/density step can leave the extremes an ulp past half a bin, so widen it
  // by ulps until the bound holds everywhere.
  const double exact = p.params.step;
  double bump = std::nextafter(exact, HUGE_VAL) - exact;
  for (int attempt = 0; attempt < 64; ++attempt) {
    if (assign_indices(v, p)) return p;
    p.params.step = exact + bump;
    bump *= 2;
  }
  throw ContractError("bin_encode: could not meet the half-bin bound");
}

Matrix bin_decode(const PackedMatrix& p) {
  if (p.rows == 0 || p.cols == 0 || p.indices.size() != std::size_t{p.rows} * p.cols) {
    throw FormatError(FormatErrorKind::malformed, "bin_decode: index count does not match the shape");
  }
  std::vector<double> out(p.indices.size(), p.params.base);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (p.indices[i] >= p.params.density) {
      throw FormatError(FormatErrorKind::index_out_of_range, "bin_decode: index " + std::to_string(p.indices[i]) +
                                                                 " >= density " + std::to_string(p.params.density));
    }
    if (p.params.step != 0.0) out[i] = center(p.params.base, p.params.step, p.indices[i]);
  }
  return Matrix(p.rows, p.cols, std::move(out));
}

double compression_rate(std::uint32_t density, std::size_t n) {
  if (density < 2 || n == 0) throw ContractError("compression_rate: need density >= 2 and n >= 1");
  const double N = static_cast<double>(n);
  return (std::log2(static_cast<double>(density)) / 8.0 * N + 2.0 * 8.0) / (8.0 * N);
}

std::size_t payload_size(std::span<const PackedMatrix> matrices) {
  std::size_t n = 4 + 1 + 4;
  for (const auto& m : matrices) {
    n += 4 * 3 + 8 * 2 + index_bytes(std::uint64_t{m.rows} * m.cols, index_bits(m.params.density));
  }
  return n;
}

std::vector<std::uint8_t> pack_payload(std::span<const PackedMatrix> matrices) {
  if (matrices.empty()) throw ContractError("pack_payload: no matrices");
  bytes::Writer w;
  w.raw(kMagic);
  w.u8(kWireVersion);
  w.u32(static_cast<std::uint32_t>(matrices.size()));
  for (const auto& m : matrices) {
    const unsigned bits = index_bits(m.params.density);
    if (m.indices.size() != std::size_t{m.rows} * m.cols) throw ContractError("pack_payload: index count mismatch");
    w.u32(m.rows);
    w.u32(m.cols);
    w.u32(m.params.density);
    w.f64(m.params.base);
    w.f64(m.params.step);
    std::vector<std::uint8_t> packed(index_bytes(m.indices.size(), bits), 0);
    std::size_t bitpos = 0;
    for (auto idx : m.indices) {
      if (idx >= m.params.density) throw ContractError("pack_payload: index exceeds density");
      for (int b = static_cast<int>(bits) - 1; b >= 0; --b, ++bitpos) {
        if ((idx >> b) & 1U) packed[bitpos / 8] |= static_cast<std::uint8_t>(0x80U >> (bitpos % 8));
      }
    }
    w.raw(packed);
  }
  return w.take();
}

std::vector<PackedMatrix> unpack_payload(std::span<const std::uint8_t> data) {
  bytes::Reader r(data);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError(FormatErrorKind::bad_magic, "payload: bad magic");
  const auto version = r.u8();
  if (version != kWireVersion) {
    throw FormatError(FormatErrorKind::unsupported_version, "payload: unsupported version " + std::to_string(version));
  }
  const auto count = r.u32();
  if (count == 0) throw FormatError(FormatErrorKind::malformed, "payload: zero matrices");

  std::vector<PackedMatrix> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    PackedMatrix m;
    m.rows = r.u32();
    m.cols = r.u32();
    m.params.density = r.u32();
    m.params.base = r.f64();
    m.params.step = r.f64();
    const std::string where = "payload matrix " + std::to_string(k) + ": ";
    if (m.rows == 0 || m.cols == 0) throw FormatError(FormatErrorKind::malformed, where + "empty shape");
    if (m.params.density < 2) throw FormatError(FormatErrorKind::malformed, where + "density < 2");
    if (!std::isfinite(m.params.base) || !std::isfinite(m.params.step) || m.params.step < 0.0) {
      throw FormatError(FormatErrorKind::malformed, where + "bad binning parameters");
    }
    const unsigned bits = index_bits(m.params.density);
    const std::uint64_t n = std::uint64_t{m.rows} * m.cols;
    const auto packed = r.raw(index_bytes(n, bits));
    m.indices.resize(n);
    std::size_t bitpos = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint32_t idx = 0;
      for (unsigned b = 0; b < bits; ++b, ++bitpos) {
        idx = (idx << 1) | ((packed[bitpos / 8] >> (7 - bitpos % 8)) & 1U);
      }
      if (idx >= m.params.density) {
        throw FormatError(FormatErrorKind::index_out_of_range,
                          where + "index " + std::to_string(idx) + " >= density " + std::to_string(m.params.density));
      }
      m.indices[i] = idx;
    }
    out.push_back(std::move(m));
  }
  if (r.remaining() != 0) throw FormatError(FormatErrorKind::malformed, "payload: trailing bytes");
  return out;
}

ErrorBoundReport verify_error_bound(const Matrix& a, std::uint32_t density, const Vector& x) {
  if (a.rows() != a.cols()) throw ContractError("verify_error_bound: matrix must be square");
  if (x.size() != a.cols()) throw ContractError("verify_error_bound: vector length mismatch");
  if (norm2(x) == 0.0) throw ContractError("verify_error_bound: x must be nonzero");
  const Matrix dA = bin_decode(bin_encode(a, density)) - a;
  if (max_abs(dA) == 0.0) throw ContractError("verify_error_bound: binning error is zero");

  const Vector b = mat_vec(a, x);
  const Vector x_dx = lu_solve(a + dA, b);
  const Vector dx = x_dx - x;

  ErrorBoundReport rep;
  rep.norm_dA = spectral_norm(dA);
  rep.norm_A = spectral_norm(a);
  rep.norm_dx = norm2(dx);
  rep.norm_x_plus_dx = norm2(x_dx);
  rep.cond = condition_number_2(a);
  rep.lhs = (rep.norm_dx * rep.norm_A) / (rep.norm_x_plus_dx * rep.norm_dA);
  rep.holds = rep.lhs <= rep.cond + 1e-9;
  return rep;
}

}  // namespace mosae::binpack
