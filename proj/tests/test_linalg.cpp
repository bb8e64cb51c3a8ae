#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "clml/errors.hpp"
#include "clml/linalg.hpp"
#include "clml/rng.hpp"
#include "oracles.hpp"

using namespace clml;

namespace {

Matrix reconstruct(const SvdResult& r) {
  Matrix us = r.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= r.s[j];
  return matmul(us, transpose(r.v));
}

double orthonormality_error(const Matrix& q) {
  const Matrix g = matmul(transpose(q), q);
  return max_abs(subtract(g, Matrix::identity(g.rows())));
}

// Orthonormal n x n matrix from Gram-Schmidt on random columns.
Matrix random_orthogonal(Rng& rng, std::size_t n) {
  Matrix q = oracle::random_matrix(rng, n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= d * q(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

double spectral_norm(const Matrix& a) { return oracle::singular_values(a).front(); }

}  // namespace

TEST_CASE("matrix construction validates shape and finiteness") {
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInputError);
  CHECK_THROWS_AS(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), InvalidInputError);
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), DimensionError);

  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6.0);
  CHECK(m.row(1)[0] == 4.0);
  CHECK(Matrix(0, 3).empty());
}

TEST_CASE("identity times a is a") {
  Rng rng(3);
  const Matrix a = oracle::random_matrix(rng, 4, 3);
  CHECK(matmul(Matrix::identity(4), a) == a);
  CHECK(matmul(a, Matrix::identity(3)) == a);
}

TEST_CASE("matmul matches the triple-loop product") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 1 + rng.below(7), k = 1 + rng.below(7), n = 1 + rng.below(7);
    const Matrix a = oracle::random_matrix(rng, m, k);
    const Matrix b = oracle::random_matrix(rng, k, n);
    CHECK(oracle::max_abs_diff(matmul(a, b), oracle::naive_matmul(a, b)) < 1e-12);
  }
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
}

TEST_CASE("transpose of a product reverses the factors") {
  Rng rng(5);
  const Matrix a = oracle::random_matrix(rng, 3, 4);
  const Matrix b = oracle::random_matrix(rng, 4, 2);
  CHECK(oracle::max_abs_diff(transpose(matmul(a, b)), matmul(transpose(b), transpose(a))) < 1e-12);
}

TEST_CASE("elementwise helpers") {
  const Matrix a = Matrix::from_rows({{1, -2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0.5, 0.5}, {-1, 2}});
  CHECK(add(a, b) == Matrix::from_rows({{1.5, -1.5}, {2, 6}}));
  CHECK(subtract(a, b) == Matrix::from_rows({{0.5, -2.5}, {4, 2}}));
  CHECK(scale(a, -2.0) == Matrix::from_rows({{-2, 4}, {-6, -8}}));
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(30.0)));
  CHECK(max_abs(a) == 4.0);
  CHECK_THROWS_AS(add(a, Matrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(subtract(a, Matrix(3, 2)), DimensionError);
}

TEST_CASE("row_select keeps index order") {
  const Matrix a = Matrix::from_rows({{1, 1}, {2, 2}, {3, 3}});
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(row_select(a, all) == a);
  const std::vector<std::size_t> picked{2, 0, 2};
  CHECK(row_select(a, picked) == Matrix::from_rows({{3, 3}, {1, 1}, {3, 3}}));
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(row_select(a, bad), std::out_of_range);
  CHECK(row_select(a, std::vector<std::size_t>{}).rows() == 0);
}

TEST_CASE("vstack concatenates rows") {
  const Matrix a = Matrix::from_rows({{1, 2}});
  const Matrix b = Matrix::from_rows({{3, 4}, {5, 6}});
  CHECK(vstack({a, b}) == Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}}));
  CHECK_THROWS_AS(vstack({a, Matrix(1, 3)}), DimensionError);
}

TEST_CASE("svd of a diagonal matrix") {
  const SvdResult r = svd(Matrix::from_rows({{1, 0}, {0, 3}}));
  CHECK(r.s[0] == doctest::Approx(3.0));
  CHECK(r.s[1] == doctest::Approx(1.0));
  CHECK(std::abs(r.u(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(r.v(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(r.u(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("svd of the zero matrix") {
  const SvdResult r = svd(Matrix(2, 2));
  CHECK(r.s == std::vector<double>{0.0, 0.0});
  CHECK(orthonormality_error(r.u) < 1e-12);
  CHECK(orthonormality_error(r.v) < 1e-12);
}

TEST_CASE("svd rejects empty and non-finite input") {
  CHECK_THROWS_AS(svd(Matrix()), InvalidInputError);
  CHECK_THROWS_AS(svd(Matrix(0, 3)), InvalidInputError);
  Matrix bad(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(bad), InvalidInputError);
}

TEST_CASE("svd invariants on random shapes") {
  Rng rng(2024);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 1 + rng.below(12);
    const std::size_t n = 1 + rng.below(12);
    Matrix a = oracle::random_matrix(rng, m, n);
    if (t % 5 == 0 && m > 1) {
      // Rank-deficient: duplicate a row.
      for (std::size_t j = 0; j < n; ++j) a(m - 1, j) = a(0, j);
    }
    const SvdResult r = svd(a);
    const std::size_t k = std::min(m, n);
    REQUIRE(r.s.size() == k);
    REQUIRE(r.u.rows() == m);
    REQUIRE(r.u.cols() == k);
    REQUIRE(r.v.rows() == n);
    REQUIRE(r.v.cols() == k);
    CHECK(oracle::max_abs_diff(reconstruct(r), a) < 1e-9);
    CHECK(orthonormality_error(r.u) < 1e-9);
    CHECK(orthonormality_error(r.v) < 1e-9);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(r.s[i] >= 0.0);
      if (i) CHECK(r.s[i - 1] >= r.s[i]);
    }
    const auto expected = oracle::singular_values(a);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(r.s[i] - expected[i]) < 1e-9 * (1.0 + expected[0]));
    // Sign convention: the largest-magnitude entry of each U column is >= 0.
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < m; ++i)
        if (std::abs(r.u(i, j)) > std::abs(r.u(arg, j))) arg = i;
      CHECK(r.u(arg, j) >= 0.0);
    }
  }
}

TEST_CASE("svd is deterministic") {
  Rng rng(8);
  const Matrix a = oracle::random_matrix(rng, 9, 5);
  const SvdResult r1 = svd(a);
  const SvdResult r2 = svd(a);
  CHECK(r1.u == r2.u);
  CHECK(r1.s == r2.s);
  CHECK(r1.v == r2.v);
}

TEST_CASE("nuclear norm of small matrices") {
  CHECK(nuclear_norm(Matrix::identity(2)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(nuclear_norm(Matrix::from_rows({{3, 0}, {0, 4}})) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(nuclear_norm(Matrix::from_rows({{1, 1}, {1, 1}})) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(nuclear_norm(Matrix::from_rows({{-3, 0}, {0, 4}})) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(nuclear_norm(Matrix(3, 2)) == 0.0);
  CHECK(nuclear_norm(Matrix(0, 4)) == 0.0);
}

TEST_CASE("nuclear norm properties") {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 1 + rng.below(8), n = 1 + rng.below(8);
    const Matrix a = oracle::random_matrix(rng, m, n);
    const Matrix b = oracle::random_matrix(rng, m, n);
    const double na = nuclear_norm(a);
    CHECK(std::abs(na - oracle::nuclear_norm(a)) < 1e-9 * na);

    const Matrix q = random_orthogonal(rng, m);
    CHECK(std::abs(nuclear_norm(matmul(q, a)) - na) < 1e-8);

    CHECK(nuclear_norm(add(a, b)) <= na + nuclear_norm(b) + 1e-8);

    const Matrix padded = vstack({a, Matrix(1 + rng.below(3), n)});
    CHECK(std::abs(nuclear_norm(padded) - na) < 1e-9);

    CHECK(std::abs(nuclear_norm(transpose(a)) - na) < 1e-9 * (1.0 + na));
  }
}

TEST_CASE("sv threshold") {
  CHECK(SvThreshold::absolute(0.5).cutoff(100.0) == 0.5);
  CHECK(SvThreshold::relative(1e-3).cutoff(10.0) == doctest::Approx(1e-2));
  CHECK(SvThreshold::relative(1e-3).is_relative());
  CHECK_FALSE(SvThreshold::absolute(1.0).is_relative());
  CHECK_THROWS_AS(SvThreshold::absolute(0.0), InvalidInputError);
  CHECK_THROWS_AS(SvThreshold::relative(-1.0), InvalidInputError);
  CHECK_THROWS_AS(SvThreshold::absolute(std::numeric_limits<double>::infinity()), InvalidInputError);
}

TEST_CASE("nuclear subgradient of small matrices") {
  CHECK(oracle::max_abs_diff(nuclear_subgradient(Matrix::identity(2), SvThreshold::absolute(1e-6)),
                             Matrix::identity(2)) < 1e-12);
  CHECK(oracle::max_abs_diff(nuclear_subgradient(Matrix::from_rows({{2, 0}, {0, 0}}), SvThreshold::absolute(1e-6)),
                             Matrix::from_rows({{1, 0}, {0, 0}})) < 1e-12);
  // Negative diagonal flips the sign of the matching direction.
  CHECK(oracle::max_abs_diff(nuclear_subgradient(Matrix::from_rows({{-2, 0}, {0, 5}})),
                             Matrix::from_rows({{-1, 0}, {0, 1}})) < 1e-12);
  CHECK(nuclear_subgradient(Matrix(0, 3)).empty());
  CHECK(nuclear_subgradient(Matrix(2, 3)) == Matrix(2, 3));
}

TEST_CASE("nuclear subgradient threshold drops small singular values") {
  const Matrix a = Matrix::from_rows({{4, 0}, {0, 0.01}});
  CHECK(oracle::max_abs_diff(nuclear_subgradient(a, SvThreshold::absolute(0.1)),
                             Matrix::from_rows({{1, 0}, {0, 0}})) < 1e-12);
  CHECK(oracle::max_abs_diff(nuclear_subgradient(a, SvThreshold::relative(1e-3)), Matrix::identity(2)) < 1e-12);
  CHECK(oracle::max_abs_diff(nuclear_subgradient(a, SvThreshold::relative(0.01)),
                             Matrix::from_rows({{1, 0}, {0, 0}})) < 1e-12);
}

TEST_CASE("nuclear subgradient matches finite differences on full-rank matrices") {
  Rng rng(61);
  for (int t = 0; t < 20; ++t) {
    Matrix a = oracle::random_matrix(rng, 6, 4);
    const auto s = oracle::singular_values(a);
    if (s.back() < 1e-2 * s.front()) continue;
    const Matrix g = nuclear_subgradient(a);
    const auto numeric = oracle::central_differences(a.data(), [&] { return oracle::nuclear_norm(a); });
    CHECK(oracle::relative_error(numeric, g.data()) < 1e-4);
  }
}

TEST_CASE("nuclear subgradient is bounded") {
  Rng rng(19);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = oracle::random_matrix(rng, 1 + rng.below(8), 1 + rng.below(8));
    const Matrix g = nuclear_subgradient(a);
    CHECK(max_abs(g) <= 1.0 + 1e-9);
    CHECK(spectral_norm(g) <= 1.0 + 1e-9);
    CHECK(g.rows() == a.rows());
    CHECK(g.cols() == a.cols());
  }
}

TEST_CASE("nuclear_norm_terms agrees with the separate calls") {
  Rng rng(4);
  const Matrix a = oracle::random_matrix(rng, 5, 3);
  const NuclearNormTerms terms = nuclear_norm_terms(a, SvThreshold::relative(1e-6));
  CHECK(terms.norm == nuclear_norm(a));
  CHECK(terms.subgradient == nuclear_subgradient(a));
  const NuclearNormTerms empty = nuclear_norm_terms(Matrix(0, 3), SvThreshold::relative(1e-6));
  CHECK(empty.norm == 0.0);
  CHECK(empty.subgradient.empty());
}
