#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace frp {

/// Dense real matrix, row-major, 64-bit.
///
/// A default-constructed Matrix is an empty placeholder (0 x 0); every sized
/// constructor requires rows >= 1 and cols >= 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b. Every output element is accumulated over the inner index in
/// ascending order, starting from +0.0, so the result equals the textbook
/// triple loop bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);
/// transpose(a) * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * transpose(b).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Complex spectrum stored as split real/imaginary parts.
struct ComplexVector {
  std::vector<double> re;
  std::vector<double> im;

  std::size_t size() const noexcept { return re.size(); }
  double magnitude(std::size_t k) const;
};

/// Forward DFT with 1/N normalization:
///   X[k] = (1/N) * sum_n x[n] * exp(-i 2 pi k n / N),  k = 0..N-1.
/// Under this convention Parseval reads  sum_n x[n]^2 / N == sum_k |X[k]|^2.
/// Direct O(N^2) evaluation; the twiddle angle is reduced as (k*n mod N) so
/// large bins stay accurate.
ComplexVector dft(std::span<const double> signal);

struct SymmetricEigen {
  std::vector<double> values;  ///< descending
  Matrix vectors;              ///< column i pairs with values[i]
};

/// Eigenvalues of a symmetric matrix, descending (cyclic Jacobi).
std::vector<double> sym_eig(const Matrix& s);
/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix.
SymmetricEigen sym_eig_vectors(const Matrix& s);

}  // namespace frp
