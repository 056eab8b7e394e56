#include "frp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "frp/errors.hpp"

#if defined(__AVX512F__) || defined(__FMA__)
#include <immintrin.h>
#endif

namespace frp {

namespace {

void require_nonzero_dims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw ValidationError("matrix dimensions must be >= 1, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));
  }
}

// C (m x n) = sum_k A(i,k) B(k,j). A is addressed through (row stride,
// k stride) so the same kernel serves A and transpose(A). B is row-major and
// contiguous along j. Full kMr x kNr tiles run on 8-wide vector registers;
// ragged edges take the scalar path. Both paths add the k terms of every
// element in ascending order starting from +0.0, each as one fused
// multiply-add when the target has FMA and as a rounded product plus a
// rounded sum otherwise.
typedef double Vec8 __attribute__((vector_size(64)));

inline double madd(double a, double b, double acc) {
#if defined(__FMA__)
  return std::fma(a, b, acc);
#else
  return acc + a * b;
#endif
}

inline Vec8 madd8(double a, Vec8 b, Vec8 acc) {
#if defined(__AVX512F__)
  return (Vec8)_mm512_fmadd_pd(_mm512_set1_pd(a), (__m512d)b, (__m512d)acc);
#elif defined(__FMA__)
  __m256d b2[2], c2[2];
  std::memcpy(b2, &b, sizeof b);
  std::memcpy(c2, &acc, sizeof acc);
  const __m256d av = _mm256_set1_pd(a);
  c2[0] = _mm256_fmadd_pd(av, b2[0], c2[0]);
  c2[1] = _mm256_fmadd_pd(av, b2[1], c2[1]);
  std::memcpy(&acc, c2, sizeof acc);
  return acc;
#else
  return acc + a * b;
#endif
}

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;

inline Vec8 load8(const double* p) {
  Vec8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store8(double* p, Vec8 v) { std::memcpy(p, &v, sizeof v); }

inline void tile_vector(const double* a, std::size_t a_rs, std::size_t a_ks, const double* b,
                        std::size_t n, std::size_t k_len, double* c, bool resume) {
  Vec8 acc[kMr][2];
  for (std::size_t r = 0; r < kMr; ++r) {
    acc[r][0] = resume ? load8(c + r * n) : Vec8{};
    acc[r][1] = resume ? load8(c + r * n + 8) : Vec8{};
  }
  for (std::size_t k = 0; k < k_len; ++k) {
    const Vec8 b0 = load8(b + k * n);
    const Vec8 b1 = load8(b + k * n + 8);
#pragma GCC unroll 6
    for (std::size_t r = 0; r < kMr; ++r) {
      const double av = a[r * a_rs + k * a_ks];
      acc[r][0] = madd8(av, b0, acc[r][0]);
      acc[r][1] = madd8(av, b1, acc[r][1]);
    }
  }
  for (std::size_t r = 0; r < kMr; ++r) {
    store8(c + r * n, acc[r][0]);
    store8(c + r * n + 8, acc[r][1]);
  }
}

inline void tile_scalar(const double* a, std::size_t a_rs, std::size_t a_ks, const double* b,
                        std::size_t n, std::size_t k_len, double* c, std::size_t rows,
                        std::size_t cols, bool resume) {
  double acc[kMr][kNr] = {};
  if (resume)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) acc[r][j] = c[r * n + j];
  for (std::size_t k = 0; k < k_len; ++k) {
    const double* brow = b + k * n;
    for (std::size_t r = 0; r < rows; ++r) {
      const double av = a[r * a_rs + k * a_ks];
      for (std::size_t j = 0; j < cols; ++j) acc[r][j] = madd(av, brow[j], acc[r][j]);
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) c[r * n + j] = acc[r][j];
}

// Long inner dimensions are processed in chunks so the active B panel stays
// in L1. A chunk resumes from the partial sums stored in C, which keeps the
// per-element addition sequence identical to the unchunked loop.
constexpr std::size_t kKc = 256;

void gemm_kernel(const double* a, std::size_t a_rs, std::size_t a_ks, const double* b,
                 std::size_t m, std::size_t n, std::size_t k_len, double* c) {
  for (std::size_t k0 = 0; k0 < k_len; k0 += kKc) {
    const std::size_t kc = std::min(kKc, k_len - k0);
    const bool resume = k0 > 0;
    const double* a_k = a + k0 * a_ks;
    const double* b_k = b + k0 * n;
    for (std::size_t i0 = 0; i0 < m; i0 += kMr) {
      const std::size_t rows = std::min(kMr, m - i0);
      const double* a_blk = a_k + i0 * a_rs;
      for (std::size_t j0 = 0; j0 < n; j0 += kNr) {
        const std::size_t cols = std::min(kNr, n - j0);
        double* c_blk = c + i0 * n + j0;
        if (rows == kMr && cols == kNr) {
          tile_vector(a_blk, a_rs, a_ks, b_k + j0, n, kc, c_blk, resume);
        } else {
          tile_scalar(a_blk, a_rs, a_ks, b_k + j0, n, kc, c_blk, rows, cols, resume);
        }
      }
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
  require_nonzero_dims(rows, cols);
  data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_nonzero_dims(rows, cols);
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged row list in Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix c(a.rows(), b.cols());
  gemm_kernel(a.data().data(), a.cols(), 1, b.data().data(), a.rows(), b.cols(), a.cols(),
              c.data().data());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose(" + a.shape_string() + ") by " +
                     b.shape_string());
  }
  Matrix c(a.cols(), b.cols());
  gemm_kernel(a.data().data(), 1, a.cols(), b.data().data(), a.cols(), b.cols(), a.rows(),
              c.data().data());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + a.shape_string() + " by transpose(" +
                     b.shape_string() + ")");
  }
  return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < a.rows(); i0 += kBlock)
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += kBlock)
      for (std::size_t i = i0; i < std::min(i0 + kBlock, a.rows()); ++i)
        for (std::size_t j = j0; j < std::min(j0 + kBlock, a.cols()); ++j) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double ComplexVector::magnitude(std::size_t k) const { return std::hypot(re[k], im[k]); }

ComplexVector dft(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) throw ValidationError("dft: empty signal");
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    cos_table[m] = std::cos(angle);
    sin_table[m] = std::sin(angle);
  }
  ComplexVector out{std::vector<double>(n), std::vector<double>(n)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;  // (k * t) mod n
    for (std::size_t t = 0; t < n; ++t) {
      re += signal[t] * cos_table[idx];
      im -= signal[t] * sin_table[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out.re[k] = re * inv_n;
    out.im[k] = im * inv_n;
  }
  return out;
}

namespace {

void check_symmetric(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw ValidationError("sym_eig: matrix is not square (" + s.shape_string() + ")");
  }
  const double scale = std::max(frobenius_norm(s), 1e-300);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-9 * scale) {
        throw ValidationError("sym_eig: matrix is not symmetric at (" + std::to_string(i) +
                              "," + std::to_string(j) + ")");
      }
}

// Cyclic Jacobi sweeps until the off-diagonal Frobenius norm drops below
// 1e-12 * ||s||_F.
SymmetricEigen jacobi(const Matrix& s, bool want_vectors) {
  check_symmetric(s);
  const std::size_t n = s.rows();
  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
  Matrix v = want_vectors ? Matrix::identity(n) : Matrix();

  const double target = 1e-12 * frobenius_norm(a);
  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) acc += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        if (want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - sn * vkq;
            v(k, q) = sn * vkp + c * vkq;
          }
        }
      }
    }
  }
  if (off_norm() > target) throw NumericError("sym_eig: Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  SymmetricEigen out;
  out.values.reserve(n);
  for (std::size_t i : order) out.values.push_back(a(i, i));
  if (want_vectors) {
    out.vectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

}  // namespace

std::vector<double> sym_eig(const Matrix& s) { return jacobi(s, false).values; }

SymmetricEigen sym_eig_vectors(const Matrix& s) { return jacobi(s, true); }

}  // namespace frp
