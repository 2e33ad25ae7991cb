// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major float64 matrices and vectors, plus the norms and solvers
// needed by the autoencoder and the binning error-bound verifier.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mosae {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0);
  /// Throws ContractError on a non-finite entry.
  explicit Vector(std::vector<double> values);
  Vector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return data_.size(); }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

class Matrix {
 public:
  /// rows, cols >= 1.
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Throws ContractError on size mismatch or a non-finite entry.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix diagonal(std::initializer_list<double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Pivot magnitude at or below which lu_solve declares the matrix singular.
inline constexpr double kPivotTolerance = 1e-12;

Vector mat_vec(const Matrix& m, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double c, const Matrix& m);
Vector operator-(const Vector& a, const Vector& b);

double norm2(const Vector& v) noexcept;
double norm_inf(const Vector& v) noexcept;
double max_abs(const Matrix& m) noexcept;

/// Gaussian elimination with partial pivoting.
Vector lu_solve(const Matrix& a, const Vector& b);

/// Inverse assembled column by column from lu_solve.
Matrix inverse(const Matrix& a);

/// Largest singular value via power iteration on m^T m; stops when the
/// estimate changes by less than 1e-10 relative or after 10 000 iterations.
double spectral_norm(const Matrix& m);

/// spectral_norm(a) * spectral_norm(inverse(a)).
double condition_number_2(const Matrix& a);

}  // namespace mosae
