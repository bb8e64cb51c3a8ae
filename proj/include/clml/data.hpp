#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "clml/labels.hpp"
#include "clml/linalg.hpp"

namespace clml {

/// Features with ground-truth and observed labels. Observed positives are a
/// subset of the true positives; every truth row has at least one positive.
struct Dataset {
  Matrix features;
  LabelMatrix truth;
  LabelMatrix observed;
  std::optional<std::vector<std::string>> class_names;

  std::size_t n_samples() const { return features.rows(); }
  std::size_t n_classes() const { return truth.n_classes(); }
  std::size_t n_features() const { return features.cols(); }

  /// Throws InvalidInputError / DimensionError when an invariant fails.
  void validate() const;
  Dataset select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SyntheticSpec {
  std::size_t n_samples = 1000;
  std::size_t n_classes = 10;
  std::size_t n_features = 32;
  std::size_t n_groups = 4;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Correlated multi-label data. `n_groups` label templates are drawn, each
/// built around a distinct anchor class plus random co-occurring classes and
/// closed under a random parent relation (child => parent). Each sample takes
/// one template, flips non-anchor labels with probability min(0.5, 0.05 *
/// noise) and reapplies the parent closure. Features are the sum of the
/// positive classes' prototype vectors plus `noise`-scaled Gaussian noise.
/// observed == truth; apply drop_labels for missing labels.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct KeepRatio {
  double ratio = 1.0;
};
struct SingleLabel {};

struct MissingnessSpec {
  std::variant<KeepRatio, SingleLabel> mode = KeepRatio{};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Hides true positives. KeepRatio keeps each positive with probability
/// `ratio`, redrawing a row whose kept set comes out empty; SingleLabel
/// keeps one uniformly chosen positive per row. Throws InvalidInputError if
/// a truth row has no positive.
LabelMatrix drop_labels(const LabelMatrix& truth, const MissingnessSpec& spec);

double average_positives_per_row(const LabelMatrix& labels);
/// Observed positives / true positives.
double kept_fraction(const LabelMatrix& truth, const LabelMatrix& observed);

/// Text format:
///   N C F
///   N lines of F features
///   N lines of C truth labels (-1 or 1)
///   N lines of C observed labels
void save_dataset(const Dataset& ds, std::ostream& out);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

struct DatasetSplit {
  Dataset train;
  Dataset holdout;
};

/// Seed-stable random holdout of round(fraction * N) rows. Both parts keep
/// the original row order.
DatasetSplit split_dataset(const Dataset& ds, double holdout_fraction, std::uint64_t seed);

}  // namespace clml
