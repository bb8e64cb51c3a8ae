#include "clml/clml.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "clml/errors.hpp"

namespace clml {

namespace {

void require_rows_match(const Matrix& z, const LabelMatrix& labels, const char* op) {
  if (z.rows() != labels.n_samples()) {
    throw DimensionError(std::string(op) + ": embedding has " + std::to_string(z.rows()) +
                         " rows, labels have " + std::to_string(labels.n_samples()));
  }
}

std::vector<std::size_t> member_rows(const LabelMatrix& labels, std::size_t k) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.n_samples(); ++i)
    if (labels.positive(i, k)) rows.push_back(i);
  return rows;
}

void require_probabilities(const LabelMatrix& observed, const Matrix& probs) {
  if (probs.rows() != observed.n_samples() || probs.cols() != observed.n_classes()) {
    throw DimensionError("label correction: probability matrix shape does not match labels");
  }
  for (double p : probs.data()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidInputError("label correction: probability outside [0,1]");
    }
  }
}

}  // namespace

void CorrectionConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("correction threshold must lie in (0,1)");
  }
  if (start_epoch < 1) throw ConfigError("correction start epoch must be >= 1");
}

Matrix class_submatrix(const Matrix& z, const LabelMatrix& labels, std::size_t class_index) {
  require_rows_match(z, labels, "class_submatrix");
  if (class_index >= labels.n_classes()) {
    throw std::out_of_range("class_submatrix: class " + std::to_string(class_index) + " of " +
                            std::to_string(labels.n_classes()));
  }
  const auto rows = member_rows(labels, class_index);
  return row_select(z, rows);
}

double clml_loss(const Matrix& z, const LabelMatrix& labels) {
  require_rows_match(z, labels, "clml_loss");
  double loss = 0.0;
  for (std::size_t k = 0; k < labels.n_classes(); ++k) {
    const auto rows = member_rows(labels, k);
    if (rows.empty()) continue;
    loss += nuclear_norm(row_select(z, rows));
  }
  return loss - nuclear_norm(z);
}

ClmlTerms clml_terms(const Matrix& z, const LabelMatrix& labels, SvThreshold threshold) {
  require_rows_match(z, labels, "clml_terms");
  ClmlTerms out;
  out.gradient = Matrix(z.rows(), z.cols());
  for (std::size_t i = 0; i < labels.n_samples(); ++i)
    if (labels.positives_in_row(i) == 0) ++out.rows_without_positive;

  for (std::size_t k = 0; k < labels.n_classes(); ++k) {
    const auto rows = member_rows(labels, k);
    if (rows.empty()) continue;
    const NuclearNormTerms part = nuclear_norm_terms(row_select(z, rows), threshold);
    out.loss += part.norm;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto dst = out.gradient.row(rows[r]);
      auto src = part.subgradient.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }

  const NuclearNormTerms whole = nuclear_norm_terms(z, threshold);
  out.loss -= whole.norm;
  if (!z.empty()) out.gradient = subtract(out.gradient, whole.subgradient);
  return out;
}

Matrix clml_gradient(const Matrix& z, const LabelMatrix& labels, SvThreshold threshold) {
  return clml_terms(z, labels, threshold).gradient;
}

LabelMatrix label_correct(const LabelMatrix& observed, const Matrix& probs, double threshold) {
  require_probabilities(observed, probs);
  LabelMatrix out = observed;
  for (std::size_t i = 0; i < observed.n_samples(); ++i)
    for (std::size_t j = 0; j < observed.n_classes(); ++j)
      if (probs(i, j) >= threshold) out.set(i, j, +1);
  return out;
}

LabelMatrix effective_labels(const LabelMatrix& observed, const Matrix& probs, std::size_t epoch,
                             const CorrectionConfig& cfg) {
  require_probabilities(observed, probs);
  if (epoch < cfg.start_epoch) return observed;
  return label_correct(observed, probs, cfg.threshold);
}

std::size_t count_corrections(const LabelMatrix& observed, const LabelMatrix& corrected) {
  if (observed.n_samples() != corrected.n_samples() ||
      observed.n_classes() != corrected.n_classes()) {
    throw DimensionError("count_corrections: shape mismatch");
  }
  std::size_t n = 0;
  const auto a = observed.entries();
  const auto b = corrected.entries();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] < 0 && b[i] > 0) ++n;
  return n;
}

}  // namespace clml
