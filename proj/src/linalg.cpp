#include "clml/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "clml/errors.hpp"

namespace clml {

namespace {

std::string shape(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: " + std::to_string(data_.size()) + " entries for shape " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  if (!all_finite()) throw InvalidInputError("Matrix: non-finite entry");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(entries));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape(a) + " * " + shape(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.data();
  auto d = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += d[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.data();
  auto d = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= d[i];
  return out;
}

Matrix scale(const Matrix& a, double factor) {
  Matrix out = a;
  for (double& x : out.data()) x *= factor;
  return out;
}

Matrix row_select(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= a.rows()) {
      throw std::out_of_range("row_select: row " + std::to_string(indices[r]) + " of " +
                              std::to_string(a.rows()));
    }
    std::ranges::copy(a.row(indices[r]), out.row(r).begin());
  }
  return out;
}

Matrix vstack(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw DimensionError("vstack: column counts differ");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  auto dst = out.data().begin();
  for (const auto& b : blocks) dst = std::ranges::copy(b.data(), dst).out;
  return out;
}

Matrix vstack(std::initializer_list<Matrix> blocks) {
  return vstack(std::span<const Matrix>(blocks.begin(), blocks.size()));
}

double frobenius_norm(const Matrix& a) {
  double sum = 0.0;
  for (double x : a.data()) sum += x * x;
  return std::sqrt(sum);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

// --- SVD -------------------------------------------------------------------

namespace {

constexpr double kJacobiTolerance = 1e-12;
constexpr int kMaxSweeps = 60;

// Columns of a column-major m x n block.
struct ColumnMajor {
  std::size_t m;
  std::size_t n;
  std::vector<double> w;

  double* col(std::size_t j) { return w.data() + j * m; }
  const double* col(std::size_t j) const { return w.data() + j * m; }
};

double dot(const double* x, const double* y, std::size_t len) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += x[i] * y[i];
  return s;
}

void rotate(double* x, double* y, std::size_t len, double c, double s) {
  for (std::size_t i = 0; i < len; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// Gram-Schmidt (two passes) of `v` against the first `count` columns of `basis`.
void orthogonalize(double* v, const ColumnMajor& basis, std::size_t count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < count; ++j) {
      const double* b = basis.col(j);
      const double proj = dot(v, b, basis.m);
      for (std::size_t i = 0; i < basis.m; ++i) v[i] -= proj * b[i];
    }
  }
}

// SVD of a matrix with rows >= cols. Returns U (m x n), S, V (n x n) sorted,
// without the sign normalisation.
SvdResult jacobi_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();

  ColumnMajor work{m, n, std::vector<double>(m * n)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) work.col(j)[i] = a(i, j);

  ColumnMajor right{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t j = 0; j < n; ++j) right.col(j)[j] = 1.0;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* wp = work.col(p);
        double* wq = work.col(q);
        const double alpha = dot(wp, wp, m);
        const double beta = dot(wq, wq, m);
        const double gamma = dot(wp, wq, m);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(wp, wq, m, c, s);
        rotate(right.col(p), right.col(q), n, c, s);
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(work.col(j), work.col(j), m));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double largest = n == 0 ? 0.0 : sigma[order.front()];
  const double negligible =
      largest * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(m, n));

  ColumnMajor left{m, n, std::vector<double>(m * n, 0.0)};
  SvdResult out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  std::size_t next_unit = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = sigma[j];
    double* u = left.col(k);
    if (sigma[j] > negligible && sigma[j] > 0.0) {
      const double* wj = work.col(j);
      for (std::size_t i = 0; i < m; ++i) u[i] = wj[i] / sigma[j];
    } else {
      // Numerically null direction: complete U from the standard basis.
      for (; next_unit < m; ++next_unit) {
        std::fill(u, u + m, 0.0);
        u[next_unit] = 1.0;
        orthogonalize(u, left, k);
        const double norm = std::sqrt(dot(u, u, m));
        if (norm > 0.5) {
          for (std::size_t i = 0; i < m; ++i) u[i] /= norm;
          ++next_unit;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = u[i];
    const double* vj = right.col(j);
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vj[i];
  }
  return out;
}

void normalize_signs(SvdResult& r) {
  for (std::size_t k = 0; k < r.s.size(); ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < r.u.rows(); ++i) {
      if (std::abs(r.u(i, k)) > best) {
        best = std::abs(r.u(i, k));
        arg = i;
      }
    }
    if (r.u(arg, k) < 0.0) {
      for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, k) = -r.u(i, k);
      for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, k) = -r.v(i, k);
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.empty()) throw InvalidInputError("svd: empty matrix");
  if (!a.all_finite()) throw InvalidInputError("svd: non-finite entry");

  SvdResult r;
  if (a.rows() >= a.cols()) {
    r = jacobi_tall(a);
  } else {
    SvdResult t = jacobi_tall(transpose(a));
    r = SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  normalize_signs(r);
  return r;
}

SvThreshold SvThreshold::absolute(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidInputError("SvThreshold: threshold must be positive and finite");
  }
  return SvThreshold(value, false);
}

SvThreshold SvThreshold::relative(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw InvalidInputError("SvThreshold: factor must be positive and finite");
  }
  return SvThreshold(factor, true);
}

double SvThreshold::cutoff(double largest_singular_value) const noexcept {
  return relative_ ? value_ * largest_singular_value : value_;
}

double nuclear_norm(const Matrix& a) {
  if (a.empty()) return 0.0;
  const SvdResult r = svd(a);
  double sum = 0.0;
  for (double s : r.s) sum += s;
  return sum;
}

NuclearNormTerms nuclear_norm_terms(const Matrix& a, SvThreshold threshold) {
  if (a.empty()) return {0.0, a};
  const SvdResult r = svd(a);
  NuclearNormTerms out{0.0, Matrix(a.rows(), a.cols())};
  for (double s : r.s) out.norm += s;
  const double cut = threshold.cutoff(r.s.front());
  Matrix& g = out.subgradient;
  for (std::size_t k = 0; k < r.s.size(); ++k) {
    if (!(r.s[k] > cut)) break;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double uik = r.u(i, k);
      auto row = g.row(i);
      for (std::size_t j = 0; j < g.cols(); ++j) row[j] += uik * r.v(j, k);
    }
  }
  return out;
}

Matrix nuclear_subgradient(const Matrix& a, SvThreshold threshold) {
  return nuclear_norm_terms(a, threshold).subgradient;
}

}  // namespace clml
