#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfprop {

/// Dense row-major matrix of 64-bit floats. All operations use fixed loop
/// orders so results are bitwise reproducible across runs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Thrown by solve_spd / cholesky when a pivot is not positive. Carries the
/// index of the offending pivot.
struct NotSpdError : std::runtime_error {
  NotSpdError(std::size_t pivot_index, double pivot_value);
  std::size_t pivot;
};

/// Standard matrix product with a fixed i-k-j loop order.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Solves a x = b for symmetric positive definite a via Cholesky (LL^T)
/// factorization. b may hold multiple right-hand sides as columns.
Matrix solve_spd(const Matrix& a, const Matrix& b);

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
Matrix cholesky(const Matrix& a);

struct EighResult {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // orthonormal columns, k-th column pairs with eigenvalues[k]
};

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi rotation
/// method. Intended for matrices up to a few hundred rows; rejects inputs
/// with ||a - a^T||_inf > 1e-10.
EighResult eigh_symmetric(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace cfprop
