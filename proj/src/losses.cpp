#include "clml/losses.hpp"

#include <cmath>
#include <string>

#include "clml/errors.hpp"
#include "clml/text_io.hpp"

namespace clml {

namespace {

void require_conformant(const Matrix& logits, const LabelMatrix& labels) {
  if (logits.rows() != labels.n_samples() || logits.cols() != labels.n_classes()) {
    throw DimensionError("classification loss: logits " + std::to_string(logits.rows()) + "x" +
                         std::to_string(logits.cols()) + " vs labels " +
                         std::to_string(labels.n_samples()) + "x" +
                         std::to_string(labels.n_classes()));
  }
}

// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& logits) {
  Matrix p = logits;
  for (double& x : p.data()) x = sigmoid(x);
  return p;
}

LossOutput bce_loss(const Matrix& logits, const LabelMatrix& labels) {
  return focal_loss(logits, labels, 0.0);
}

LossOutput focal_loss(const Matrix& logits, const LabelMatrix& labels, double gamma) {
  require_conformant(logits, labels);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidInputError("focal_loss: gamma must be a finite nonnegative number");
  }
  LossOutput out{0.0, Matrix(logits.rows(), logits.cols())};
  const double slots = static_cast<double>(logits.size());
  if (slots == 0.0) return out;

  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double y = labels(i, j);
      // Signed margin: p_t = sigmoid(s).
      const double s = y * logits(i, j);
      const double nll = softplus(-s);  // -log p_t
      const double miss = sigmoid(-s);  // 1 - p_t
      double slot_loss;
      double d_ds;
      if (gamma == 0.0) {
        slot_loss = nll;
        d_ds = -miss;
      } else {
        const double modulator = std::pow(miss, gamma);
        const double p_t = sigmoid(s);
        slot_loss = modulator * nll;
        d_ds = modulator * (-gamma * p_t * nll - miss);
      }
      out.value += slot_loss;
      out.grad_logits(i, j) = y * d_ds / slots;
    }
  }
  out.value /= slots;
  return out;
}

ClassificationLoss make_loss(const LossKind& kind) {
  if (const auto* focal = std::get_if<FocalLoss>(&kind)) {
    const double gamma = focal->gamma;
    return [gamma](const Matrix& logits, const LabelMatrix& labels) {
      return focal_loss(logits, labels, gamma);
    };
  }
  return bce_loss;
}

std::string describe(const LossKind& kind) {
  if (const auto* focal = std::get_if<FocalLoss>(&kind)) {
    return "focal(" + text::format_double(focal->gamma) + ")";
  }
  return "bce";
}

}  // namespace clml
