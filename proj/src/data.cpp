#include "clml/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

#include "clml/errors.hpp"
#include "clml/rng.hpp"
#include "clml/text_io.hpp"

namespace clml {

namespace {

constexpr double kParentProbability = 0.3;
constexpr double kCooccurrenceProbability = 0.2;
constexpr double kFlipPerNoise = 0.05;

// parent[c] < c, so a descending sweep closes chains in one pass.
void close_under_parents(std::vector<bool>& present, const std::vector<std::optional<std::size_t>>& parent) {
  for (std::size_t c = present.size(); c-- > 0;)
    if (present[c] && parent[c]) present[*parent[c]] = true;
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = features.rows();
  if (truth.n_samples() != n || observed.n_samples() != n) {
    throw DimensionError("dataset: features, truth and observed row counts differ");
  }
  if (truth.n_classes() != observed.n_classes()) {
    throw DimensionError("dataset: truth and observed class counts differ");
  }
  if (class_names && class_names->size() != truth.n_classes()) {
    throw DimensionError("dataset: class name count differs from class count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (truth.positives_in_row(i) == 0) {
      throw InvalidInputError("dataset: row " + std::to_string(i) + " has no true positive");
    }
    for (std::size_t j = 0; j < truth.n_classes(); ++j) {
      if (observed.positive(i, j) && !truth.positive(i, j)) {
        throw InvalidInputError("dataset: row " + std::to_string(i) +
                                " observes a label that is not truly present");
      }
    }
  }
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  return Dataset{row_select(features, indices), truth.select_rows(indices),
                 observed.select_rows(indices), class_names};
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_samples < 1 || spec.n_classes < 1 || spec.n_features < 1 || spec.n_groups < 1) {
    throw ConfigError("generate_synthetic: all counts must be >= 1");
  }
  if (spec.n_groups > spec.n_classes) {
    throw ConfigError("generate_synthetic: more groups than classes");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    throw ConfigError("generate_synthetic: noise must be finite and >= 0");
  }

  const std::size_t n_classes = spec.n_classes;
  Rng rng = Rng::derive(spec.seed, "data");

  std::vector<std::optional<std::size_t>> parent(n_classes);
  for (std::size_t c = 1; c < n_classes; ++c)
    if (rng.bernoulli(kParentProbability)) parent[c] = rng.below(c);

  Matrix prototypes(n_classes, spec.n_features);
  for (double& x : prototypes.data()) x = rng.normal();

  std::vector<std::size_t> classes(n_classes);
  std::iota(classes.begin(), classes.end(), std::size_t{0});
  rng.shuffle(classes);
  const std::vector<std::size_t> anchors(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(spec.n_groups));

  std::vector<std::vector<bool>> templates;
  for (std::size_t anchor : anchors) {
    std::vector<bool> present(n_classes, false);
    present[anchor] = true;
    for (std::size_t c = 0; c < n_classes; ++c)
      if (c != anchor && rng.bernoulli(kCooccurrenceProbability)) present[c] = true;
    close_under_parents(present, parent);
    templates.push_back(std::move(present));
  }

  const double flip = std::min(0.5, kFlipPerNoise * spec.noise);
  Dataset ds{Matrix(spec.n_samples, spec.n_features), LabelMatrix(spec.n_samples, n_classes),
             LabelMatrix(spec.n_samples, n_classes), std::nullopt};
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const std::size_t g = rng.below(spec.n_groups);
    std::vector<bool> present = templates[g];
    if (flip > 0.0) {
      for (std::size_t c = 0; c < n_classes; ++c)
        if (c != anchors[g] && rng.bernoulli(flip)) present[c] = !present[c];
      close_under_parents(present, parent);
    }
    auto x = ds.features.row(i);
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (!present[c]) continue;
      ds.truth.set(i, c, +1);
      const auto proto = prototypes.row(c);
      for (std::size_t f = 0; f < x.size(); ++f) x[f] += proto[f];
    }
    if (spec.noise > 0.0)
      for (double& v : x) v += spec.noise * rng.normal();
  }
  ds.observed = ds.truth;
  return ds;
}

void MissingnessSpec::validate() const {
  if (const auto* keep = std::get_if<KeepRatio>(&mode)) {
    if (!(keep->ratio > 0.0 && keep->ratio <= 1.0)) {
      throw ConfigError("keep ratio must lie in (0,1]");
    }
  }
}

LabelMatrix drop_labels(const LabelMatrix& truth, const MissingnessSpec& spec) {
  spec.validate();
  Rng rng = Rng::derive(spec.seed, "missing");
  LabelMatrix observed(truth.n_samples(), truth.n_classes());
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < truth.n_samples(); ++i) {
    positives.clear();
    for (std::size_t j = 0; j < truth.n_classes(); ++j)
      if (truth.positive(i, j)) positives.push_back(j);
    if (positives.empty()) {
      throw InvalidInputError("drop_labels: row " + std::to_string(i) + " has no positive label");
    }

    if (std::holds_alternative<SingleLabel>(spec.mode)) {
      observed.set(i, positives[rng.below(positives.size())], +1);
      continue;
    }
    const double ratio = std::get<KeepRatio>(spec.mode).ratio;
    std::vector<bool> keep(positives.size());
    bool any = false;
    while (!any) {
      for (std::size_t k = 0; k < positives.size(); ++k) {
        keep[k] = rng.bernoulli(ratio);
        any = any || keep[k];
      }
    }
    for (std::size_t k = 0; k < positives.size(); ++k)
      if (keep[k]) observed.set(i, positives[k], +1);
  }
  return observed;
}

double average_positives_per_row(const LabelMatrix& labels) {
  if (labels.n_samples() == 0) return 0.0;
  return static_cast<double>(labels.count_positive()) / static_cast<double>(labels.n_samples());
}

double kept_fraction(const LabelMatrix& truth, const LabelMatrix& observed) {
  const std::size_t total = truth.count_positive();
  if (total == 0) return 0.0;
  return static_cast<double>(observed.count_positive()) / static_cast<double>(total);
}

// --- file I/O ----------------------------------------------------------------

namespace {

void write_labels(const LabelMatrix& labels, std::ostream& out) {
  for (std::size_t i = 0; i < labels.n_samples(); ++i) {
    const auto row = labels.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << (row[j] > 0 ? "1" : "-1");
    }
    out << '\n';
  }
}

std::vector<std::string_view> expect_fields(std::istream& in, std::string& line, std::size_t& line_no,
                                            std::size_t count, const char* what) {
  if (!text::read_line(in, line, line_no)) {
    throw ParseError(line_no + 1, std::string("unexpected end of file reading ") + what);
  }
  auto fields = text::split_fields(line);
  if (fields.size() != count) {
    throw ParseError(line_no, std::string(what) + ": expected " + std::to_string(count) +
                                  " fields, found " + std::to_string(fields.size()));
  }
  return fields;
}

LabelMatrix read_labels(std::istream& in, std::string& line, std::size_t& line_no, std::size_t n,
                        std::size_t c, const char* what, std::size_t& first_line) {
  std::vector<std::int8_t> entries;
  entries.reserve(n * c);
  first_line = line_no + 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto field : expect_fields(in, line, line_no, c, what)) {
      const long long v = text::parse_int(field, line_no);
      if (v != -1 && v != 1) {
        throw ParseError(line_no, std::string(what) + ": label must be -1 or 1, got '" +
                                      std::string(field) + "'");
      }
      entries.push_back(static_cast<std::int8_t>(v));
    }
  }
  return LabelMatrix(n, c, std::move(entries));
}

}  // namespace

void save_dataset(const Dataset& ds, std::ostream& out) {
  ds.validate();
  out << ds.n_samples() << ' ' << ds.n_classes() << ' ' << ds.n_features() << '\n';
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    const auto row = ds.features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << text::format_double(row[j]);
    }
    out << '\n';
  }
  write_labels(ds.truth, out);
  write_labels(ds.observed, out);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_dataset(ds, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset load_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  const auto header = expect_fields(in, line, line_no, 3, "header 'N C F'");
  const std::size_t n = text::parse_count(header[0], line_no);
  const std::size_t c = text::parse_count(header[1], line_no);
  const std::size_t f = text::parse_count(header[2], line_no);
  if (n == 0 || c == 0 || f == 0) throw ParseError(line_no, "header counts must be positive");

  std::vector<double> features;
  features.reserve(n * f);
  for (std::size_t i = 0; i < n; ++i)
    for (auto field : expect_fields(in, line, line_no, f, "feature row"))
      features.push_back(text::parse_double(field, line_no));

  std::size_t truth_start = 0;
  std::size_t observed_start = 0;
  LabelMatrix truth = read_labels(in, line, line_no, n, c, "truth labels", truth_start);
  LabelMatrix observed = read_labels(in, line, line_no, n, c, "observed labels", observed_start);
  while (text::read_line(in, line, line_no)) {
    if (!text::split_fields(line).empty()) throw ParseError(line_no, "unexpected trailing content");
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (truth.positives_in_row(i) == 0) {
      throw ParseError(truth_start + i, "truth row has no positive label");
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (observed.positive(i, j) && !truth.positive(i, j)) {
        throw ParseError(observed_start + i, "observed positive is not a true positive");
      }
    }
  }
  return Dataset{Matrix(n, f, std::move(features)), std::move(truth), std::move(observed), std::nullopt};
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return load_dataset(in);
}

DatasetSplit split_dataset(const Dataset& ds, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0,1)");
  }
  const std::size_t n = ds.n_samples();
  const auto n_holdout = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, "split");
  rng.shuffle(order);
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_holdout), order.end());
  std::ranges::sort(holdout);
  std::ranges::sort(train);
  return DatasetSplit{ds.select_rows(train), ds.select_rows(holdout)};
}

}  // namespace clml
