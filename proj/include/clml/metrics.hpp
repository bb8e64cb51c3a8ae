#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clml/labels.hpp"
#include "clml/linalg.hpp"

namespace clml {

/// Multi-label evaluation at a fixed confidence threshold.
///
/// cp/cr average per-class precision and recall over classes with at least
/// one true positive; op/or_ pool every label slot. cf1 and of1 are the
/// harmonic means of those averages. A class with no predicted positives
/// has precision 0.
struct MetricsReport {
  double map = 0.0;
  double cp = 0.0;
  double cr = 0.0;
  double cf1 = 0.0;
  double op = 0.0;
  double or_ = 0.0;
  double of1 = 0.0;
  /// nullopt for classes without a true positive; those are left out of
  /// map, cp and cr.
  std::vector<std::optional<double>> per_class_ap;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline constexpr double kDefaultConfidenceThreshold = 0.5;

/// All-point average precision of one class: scores ranked descending, ties
/// kept in input order. nullopt when `truth` holds no positive.
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::int8_t> truth);

/// A label is predicted positive when its probability is >= threshold.
MetricsReport report(const Matrix& probs, const LabelMatrix& truth,
                     double threshold = kDefaultConfidenceThreshold);

/// "name value" per line, four decimals: map cp cr cf1 op or of1.
std::string format_report(const MetricsReport& r);

}  // namespace clml
