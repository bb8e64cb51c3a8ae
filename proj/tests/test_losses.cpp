#include <doctest.h>

#include <cmath>

#include "clml/errors.hpp"
#include "clml/losses.hpp"
#include "clml/rng.hpp"
#include "oracles.hpp"

using namespace clml;

namespace {

double naive_focal(const Matrix& logits, const LabelMatrix& y, double gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i)
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double p = 1.0 / (1.0 + std::exp(-logits(i, j)));
      const double pt = y(i, j) > 0 ? p : 1.0 - p;
      total += -std::pow(1.0 - pt, gamma) * std::log(pt);
    }
  return total / static_cast<double>(logits.size());
}

}  // namespace

TEST_CASE("bce at logit zero is log 2 per slot") {
  const LossOutput out = bce_loss(Matrix(3, 4), LabelMatrix::from_rows({{1, -1, 1, -1}, {1, 1, 1, 1}, {-1, -1, -1, -1}}));
  CHECK(out.value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(out.grad_logits(0, 0) == doctest::Approx(-0.5 / 12.0));
  CHECK(out.grad_logits(0, 1) == doctest::Approx(0.5 / 12.0));
}

TEST_CASE("saturated correct predictions cost nothing") {
  const Matrix logits = Matrix::from_rows({{20.0, -20.0}});
  const LabelMatrix y = LabelMatrix::from_rows({{1, -1}});
  CHECK(bce_loss(logits, y).value < 1e-8);
  CHECK(focal_loss(logits, y, 2.0).value < 1e-8);
}

TEST_CASE("extreme logits stay finite") {
  const Matrix logits = Matrix::from_rows({{800.0, -800.0, 800.0}});
  const LabelMatrix y = LabelMatrix::from_rows({{-1, 1, 1}});
  for (double gamma : {0.0, 0.5, 2.0}) {
    const LossOutput out = focal_loss(logits, y, gamma);
    CHECK(std::isfinite(out.value));
    CHECK(out.grad_logits.all_finite());
  }
  CHECK(bce_loss(logits, y).value == doctest::Approx(1600.0 / 3.0));
}

TEST_CASE("losses match the naive formulas") {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const Matrix logits = oracle::random_matrix(rng, 1 + rng.below(6), 1 + rng.below(5), 3.0);
    const LabelMatrix y = oracle::random_labels(rng, logits.rows(), logits.cols(), 0.5, false);
    for (double gamma : {0.0, 1.0, 2.0, 3.5})
      CHECK(focal_loss(logits, y, gamma).value == doctest::Approx(naive_focal(logits, y, gamma)).epsilon(1e-12));
  }
}

TEST_CASE("bce gradient matches finite differences") {
  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    Matrix logits = oracle::random_matrix(rng, 1 + rng.below(6), 1 + rng.below(5), 2.0);
    const LabelMatrix y = oracle::random_labels(rng, logits.rows(), logits.cols(), 0.5, false);
    const LossOutput out = bce_loss(logits, y);
    const auto numeric = oracle::central_differences(logits.data(), [&] { return naive_focal(logits, y, 0.0); });
    CHECK(oracle::relative_error(numeric, out.grad_logits.data()) < 1e-6);
  }
}

TEST_CASE("focal gradient matches finite differences") {
  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    Matrix logits = oracle::random_matrix(rng, 1 + rng.below(6), 1 + rng.below(5), 2.0);
    const LabelMatrix y = oracle::random_labels(rng, logits.rows(), logits.cols(), 0.5, false);
    for (double gamma : {0.5, 2.0}) {
      const LossOutput out = focal_loss(logits, y, gamma);
      const auto numeric =
          oracle::central_differences(logits.data(), [&] { return naive_focal(logits, y, gamma); });
      CHECK(oracle::relative_error(numeric, out.grad_logits.data()) < 1e-5);
    }
  }
}

TEST_CASE("focal with gamma zero equals bce") {
  Rng rng(24);
  const Matrix logits = oracle::random_matrix(rng, 7, 5, 3.0);
  const LabelMatrix y = oracle::random_labels(rng, 7, 5, 0.5, false);
  const LossOutput a = bce_loss(logits, y);
  const LossOutput b = focal_loss(logits, y, 0.0);
  CHECK(std::abs(a.value - b.value) < 1e-12);
  CHECK(oracle::max_abs_diff(a.grad_logits, b.grad_logits) < 1e-12);
}

TEST_CASE("losses are nonnegative and focal never exceeds bce") {
  Rng rng(25);
  for (int t = 0; t < 50; ++t) {
    const Matrix logits = oracle::random_matrix(rng, 1 + rng.below(4), 1 + rng.below(4), 4.0);
    const LabelMatrix y = oracle::random_labels(rng, logits.rows(), logits.cols(), 0.5, false);
    const double bce = bce_loss(logits, y).value;
    CHECK(bce >= 0.0);
    for (std::size_t i = 0; i < logits.rows(); ++i)
      for (std::size_t j = 0; j < logits.cols(); ++j) {
        const Matrix slot = Matrix::from_rows({{logits(i, j)}});
        const LabelMatrix ys = LabelMatrix::from_rows({{y(i, j)}});
        const double f = focal_loss(slot, ys, 2.0).value;
        CHECK(f >= 0.0);
        CHECK(f <= bce_loss(slot, ys).value);
      }
  }
}

TEST_CASE("loss errors") {
  CHECK_THROWS_AS(bce_loss(Matrix(2, 3), LabelMatrix(2, 2)), DimensionError);
  CHECK_THROWS_AS(focal_loss(Matrix(2, 2), LabelMatrix(2, 2), -1.0), InvalidInputError);
}

TEST_CASE("loss kinds dispatch") {
  Rng rng(26);
  const Matrix logits = oracle::random_matrix(rng, 3, 3);
  const LabelMatrix y = oracle::random_labels(rng, 3, 3);
  CHECK(make_loss(BceLoss{})(logits, y).value == bce_loss(logits, y).value);
  CHECK(make_loss(FocalLoss{1.5})(logits, y).value == focal_loss(logits, y, 1.5).value);
  CHECK(FocalLoss{}.gamma == 2.0);
  CHECK(describe(BceLoss{}) == "bce");
  CHECK(describe(FocalLoss{2.0}).find("focal") == 0);

  // Any callable can be plugged in.
  ClassificationLoss custom = [](const Matrix& l, const LabelMatrix&) {
    return LossOutput{1.0, Matrix(l.rows(), l.cols())};
  };
  CHECK(custom(logits, y).value == 1.0);
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-1000.0) == 0.0);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
  const Matrix p = sigmoid(Matrix::from_rows({{0.0, 1.0}}));
  CHECK(p(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}
