#pragma once

#include <functional>
#include <string>
#include <variant>

#include "clml/labels.hpp"
#include "clml/linalg.hpp"

namespace clml {

/// Classification loss value (mean over all N x C label slots) and its
/// gradient with respect to the logits.
struct LossOutput {
  double value = 0.0;
  Matrix grad_logits;
};

/// Plug-in point for classification losses. Anything that maps logits and
/// labels to a LossOutput can be paired with the contrastive term.
using ClassificationLoss = std::function<LossOutput(const Matrix& logits, const LabelMatrix& labels)>;

/// Sigmoid cross-entropy; -1 entries are treated as negatives.
LossOutput bce_loss(const Matrix& logits, const LabelMatrix& labels);

/// Focal loss -(1 - p_t)^gamma log p_t, no class-balancing weight.
/// gamma = 0 gives bce_loss exactly.
LossOutput focal_loss(const Matrix& logits, const LabelMatrix& labels, double gamma);

struct BceLoss {
  friend bool operator==(const BceLoss&, const BceLoss&) = default;
};
struct FocalLoss {
  double gamma = 2.0;
  friend bool operator==(const FocalLoss&, const FocalLoss&) = default;
};
using LossKind = std::variant<BceLoss, FocalLoss>;

ClassificationLoss make_loss(const LossKind& kind);
std::string describe(const LossKind& kind);

double sigmoid(double x) noexcept;
Matrix sigmoid(const Matrix& logits);

}  // namespace clml
