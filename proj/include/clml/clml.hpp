#pragma once

#include <cstddef>

#include "clml/labels.hpp"
#include "clml/linalg.hpp"

namespace clml {

/// Label-correction settings: an observed negative becomes positive once the
/// predicted probability reaches `threshold`, from epoch `start_epoch` on.
struct CorrectionConfig {
  double threshold = 0.6;
  std::size_t start_epoch = 1;

  /// Throws ConfigError unless 0 < threshold < 1 and start_epoch >= 1.
  void validate() const;
};

/// Rows of `z` labelled +1 for `class_index`, in their original order.
Matrix class_submatrix(const Matrix& z, const LabelMatrix& labels, std::size_t class_index);

/// Contrastive loss sum_k ||Z_k||_* - ||Z||_*. Classes without a positive row
/// contribute nothing.
double clml_loss(const Matrix& z, const LabelMatrix& labels);

/// Descent direction of clml_loss: per-class nuclear subgradients scattered
/// back to their source rows and summed in ascending class order, minus the
/// subgradient of the whole embedding.
Matrix clml_gradient(const Matrix& z, const LabelMatrix& labels,
                     SvThreshold threshold = SvThreshold::relative(kDefaultRelativeSvThreshold));

/// Loss and gradient from a single pass over the SVDs.
struct ClmlTerms {
  double loss = 0.0;
  Matrix gradient;
  /// Rows with no positive label. They only enter the -||Z||_* term, so
  /// the loss is no longer guaranteed nonnegative when this is nonzero.
  std::size_t rows_without_positive = 0;
};

ClmlTerms clml_terms(const Matrix& z, const LabelMatrix& labels,
                     SvThreshold threshold = SvThreshold::relative(kDefaultRelativeSvThreshold));

/// Entry (i,j) becomes +1 when probs(i,j) >= threshold, otherwise keeps the
/// observed value. Positives are never removed.
LabelMatrix label_correct(const LabelMatrix& observed, const Matrix& probs, double threshold);

/// Observed labels before `cfg.start_epoch`, corrected labels from then on.
/// Epochs are numbered from 1.
LabelMatrix effective_labels(const LabelMatrix& observed, const Matrix& probs, std::size_t epoch,
                             const CorrectionConfig& cfg);

/// Entries that are +1 in `corrected` but -1 in `observed`.
std::size_t count_corrections(const LabelMatrix& observed, const LabelMatrix& corrected);

}  // namespace clml
