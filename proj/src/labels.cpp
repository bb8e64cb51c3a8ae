#include "clml/labels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "clml/errors.hpp"

namespace clml {

namespace {

void require_label(int value) {
  if (value != -1 && value != 1) {
    throw InvalidInputError("label must be -1 or +1, got " + std::to_string(value));
  }
}

}  // namespace

LabelMatrix::LabelMatrix(std::size_t n_samples, std::size_t n_classes)
    : n_samples_(n_samples), n_classes_(n_classes), data_(n_samples * n_classes, -1) {}

LabelMatrix::LabelMatrix(std::size_t n_samples, std::size_t n_classes,
                         std::vector<std::int8_t> entries)
    : n_samples_(n_samples), n_classes_(n_classes), data_(std::move(entries)) {
  if (data_.size() != n_samples_ * n_classes_) {
    throw DimensionError("LabelMatrix: " + std::to_string(data_.size()) + " entries for shape " +
                         std::to_string(n_samples_) + "x" + std::to_string(n_classes_));
  }
  for (auto v : data_) require_label(v);
}

LabelMatrix LabelMatrix::from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  const std::size_t n = rows.size();
  const std::size_t c = n == 0 ? 0 : rows.begin()->size();
  std::vector<std::int8_t> entries;
  entries.reserve(n * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("LabelMatrix::from_rows: ragged rows");
    for (int v : row) {
      require_label(v);
      entries.push_back(static_cast<std::int8_t>(v));
    }
  }
  return LabelMatrix(n, c, std::move(entries));
}

void LabelMatrix::set(std::size_t i, std::size_t j, int value) {
  require_label(value);
  data_[i * n_classes_ + j] = static_cast<std::int8_t>(value);
}

std::size_t LabelMatrix::positives_in_row(std::size_t i) const noexcept {
  const auto r = row(i);
  return static_cast<std::size_t>(std::ranges::count(r, std::int8_t{1}));
}

std::size_t LabelMatrix::count_positive() const noexcept {
  return static_cast<std::size_t>(std::ranges::count(data_, std::int8_t{1}));
}

LabelMatrix LabelMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<std::int8_t> out;
  out.reserve(indices.size() * n_classes_);
  for (std::size_t i : indices) {
    if (i >= n_samples_) {
      throw std::out_of_range("LabelMatrix::select_rows: row " + std::to_string(i) + " of " +
                              std::to_string(n_samples_));
    }
    const auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  LabelMatrix m;
  m.n_samples_ = indices.size();
  m.n_classes_ = n_classes_;
  m.data_ = std::move(out);
  return m;
}

}  // namespace clml
