#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace clml {

/// Dense row-major matrix of doubles.
///
/// Every constructor that takes entries rejects NaN/Inf. Mutable element
/// access is unchecked, so code that writes computed values is responsible
/// for keeping them finite (see `all_finite`).
class Matrix {
 public:
  Matrix() = default;
  /// rows x cols of zeros.
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);
/// Rows of `a` at `indices`, in the order given.
Matrix row_select(const Matrix& a, std::span<const std::size_t> indices);
/// Row-wise concatenation; all blocks must share a column count.
Matrix vstack(std::span<const Matrix> blocks);
Matrix vstack(std::initializer_list<Matrix> blocks);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

/// Thin SVD a = U diag(S) V^T with r = min(m, n) columns in U and V.
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix v;
};

/// One-sided Jacobi SVD. S is nonincreasing, U and V have orthonormal
/// columns, and the largest-magnitude entry of every U column is
/// nonnegative. Throws InvalidInputError on an empty or non-finite input.
SvdResult svd(const Matrix& a);

/// Cutoff below which singular values are dropped from the subgradient.
class SvThreshold {
 public:
  /// Keep singular values strictly greater than `value`.
  static SvThreshold absolute(double value);
  /// Keep singular values strictly greater than `factor` times the largest.
  static SvThreshold relative(double factor);

  double cutoff(double largest_singular_value) const noexcept;
  double value() const noexcept { return value_; }
  bool is_relative() const noexcept { return relative_; }

  friend bool operator==(const SvThreshold&, const SvThreshold&) = default;

 private:
  SvThreshold(double value, bool relative) : value_(value), relative_(relative) {}
  double value_;
  bool relative_;
};

inline constexpr double kDefaultRelativeSvThreshold = 1e-6;

/// Sum of singular values. Zero for a matrix with no entries.
double nuclear_norm(const Matrix& a);

/// U1 V1^T over the singular pairs above the threshold. Same shape as `a`;
/// an empty input yields an empty result.
Matrix nuclear_subgradient(const Matrix& a,
                           SvThreshold threshold = SvThreshold::relative(kDefaultRelativeSvThreshold));

/// nuclear_norm and nuclear_subgradient from one SVD.
struct NuclearNormTerms {
  double norm = 0.0;
  Matrix subgradient;
};

NuclearNormTerms nuclear_norm_terms(const Matrix& a, SvThreshold threshold);

}  // namespace clml
