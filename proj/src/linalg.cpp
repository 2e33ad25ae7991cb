// SPDX-License-Identifier: Apache-2.0
#include "mosae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "mosae/error.hpp"
#include "mosae/kernels.hpp"

namespace mosae {
namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ContractError(std::string(what) + ": non-finite entry");
  }
}

void require(bool cond, const char* message) {
  if (!cond) throw ContractError(message);
}

}  // namespace

Vector::Vector(std::size_t n, double fill) : data_(n, fill) { require_finite(data_, "Vector"); }

Vector::Vector(std::vector<double> values) : data_(std::move(values)) {
  require_finite(data_, "Vector");
}

Vector::Vector(std::initializer_list<double> values) : data_(values) {
  require_finite(data_, "Vector");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require(rows >= 1 && cols >= 1, "Matrix: rows and cols must be >= 1");
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  require(rows >= 1 && cols >= 1, "Matrix: rows and cols must be >= 1");
  require(data_.size() == rows * cols, "Matrix: data length != rows * cols");
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  require(rows_ >= 1 && cols_ >= 1, "Matrix: rows and cols must be >= 1");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  require_finite(m.span(), "Matrix");
  return m;
}

Matrix Matrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Vector mat_vec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) throw ContractError("mat_vec: m.cols != v.len");
  Vector out(m.rows());
  kernels::active().gemv(m.span().data(), m.rows(), m.cols(), v.span().data(), nullptr,
                         out.span().data());
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) kernels::axpy(a(i, k), b.row(k), dst);
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("matrix +: shape mismatch");
  Matrix out = a;
  auto dst = out.span();
  auto src = b.span();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("matrix -: shape mismatch");
  Matrix out = a;
  auto dst = out.span();
  auto src = b.span();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

Matrix operator*(double c, const Matrix& m) {
  Matrix out = m;
  for (double& v : out.span()) v *= c;
  return out;
}

Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ContractError("vector -: length mismatch");
  Vector out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
  return out;
}

double norm2(const Vector& v) noexcept {
  // Scaled accumulation keeps tiny and huge entries from under/overflowing.
  double scale = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) scale = std::max(scale, std::abs(v[i]));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i] / scale;
    s += x * x;
  }
  return scale * std::sqrt(s);
}

double norm_inf(const Vector& v) noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

double max_abs(const Matrix& m) noexcept {
  double out = 0.0;
  for (double v : m.span()) out = std::max(out, std::abs(v));
  return out;
}

Vector lu_solve(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols()) throw ContractError("lu_solve: matrix not square");
  if (a.rows() != b.size()) throw ContractError("lu_solve: rhs length mismatch");
  const std::size_t n = a.rows();
  Matrix lu = a;
  Vector x = b;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(lu(r, k)) > best) {
        best = std::abs(lu(r, k));
        piv = r;
      }
    }
    if (best <= kPivotTolerance) {
      throw SingularMatrixError("lu_solve: pivot " + std::to_string(best) + " at column " +
                                std::to_string(k) + " below tolerance");
    }
    if (piv != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(piv).begin());
      std::swap(x[k], x[piv]);
    }
    const auto pivot_row = lu.row(k).subspan(k + 1);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = lu(r, k) / lu(k, k);
      if (f == 0.0) continue;
      lu(r, k) = 0.0;
      kernels::axpy(-f, pivot_row, lu.row(r).subspan(k + 1));
      x[r] -= f * x[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = x[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= lu(k, c) * x[c];
    x[k] = s / lu(k, k);
  }
  return x;
}

Matrix inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractError("inverse: matrix not square");
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vector e(n);
    e[c] = 1.0;
    const Vector col = lu_solve(a, e);
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

double spectral_norm(const Matrix& m) {
  if (!m.all_finite()) throw ContractError("spectral_norm: non-finite matrix");
  if (max_abs(m) == 0.0) return 0.0;

  constexpr int kMaxIterations = 10'000;
  constexpr double kRelTol = 1e-10;

  // Fixed pseudo-random start so the result is reproducible and the start
  // vector is not orthogonal to the dominant right singular vector in practice.
  Vector v(m.cols());
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (std::size_t i = 0; i < v.size(); ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    v[i] = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
  }

  double sigma = 0.0;
  Vector mv(m.rows());
  for (int it = 0; it < kMaxIterations; ++it) {
    const double vn = norm2(v);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] /= vn;
    mv = mat_vec(m, v);
    const double next = norm2(mv) / norm2(v);
    Vector u(m.cols());
    kernels::active().gemv_t_acc(m.span().data(), m.rows(), m.cols(), mv.span().data(),
                                 u.span().data());
    if (norm2(u) == 0.0) return next;
    const bool converged = it > 0 && std::abs(next - sigma) <= kRelTol * next;
    sigma = next;
    if (converged) break;
    v = std::move(u);
  }
  return sigma;
}

double condition_number_2(const Matrix& a) {
  return spectral_norm(a) * spectral_norm(inverse(a));
}

}  // namespace mosae
