#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace clml {

/// N x C matrix of labels in {-1, +1}. Serves as ground truth, observed
/// labels (missing positives encoded as -1) and corrected labels alike.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  /// All entries -1.
  LabelMatrix(std::size_t n_samples, std::size_t n_classes);
  LabelMatrix(std::size_t n_samples, std::size_t n_classes, std::vector<std::int8_t> entries);

  static LabelMatrix from_rows(std::initializer_list<std::initializer_list<int>> rows);

  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  int operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_classes_ + j]; }
  bool positive(std::size_t i, std::size_t j) const noexcept { return data_[i * n_classes_ + j] > 0; }
  /// `value` must be -1 or +1.
  void set(std::size_t i, std::size_t j, int value);

  std::span<const std::int8_t> row(std::size_t i) const noexcept {
    return {data_.data() + i * n_classes_, n_classes_};
  }
  std::span<const std::int8_t> entries() const noexcept { return data_; }

  std::size_t positives_in_row(std::size_t i) const noexcept;
  std::size_t count_positive() const noexcept;

  LabelMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t n_samples_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<std::int8_t> data_;
};

}  // namespace clml
