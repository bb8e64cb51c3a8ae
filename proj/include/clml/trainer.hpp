#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clml/clml.hpp"
#include "clml/data.hpp"
#include "clml/losses.hpp"
#include "clml/metrics.hpp"
#include "clml/model.hpp"

namespace clml {

struct TrainConfig {
  /// Weight of the contrastive term.
  double lambda = 1.0;
  /// Off: plain classification-loss training, no contrastive path at all.
  bool use_clml = true;
  bool label_correction = true;
  CorrectionConfig correction;
  SvThreshold sv_threshold = SvThreshold::relative(kDefaultRelativeSvThreshold);
  LossKind loss = BceLoss{};
  AdamConfig adam;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  /// Enables an exponential moving average copy of the parameters.
  std::optional<double> ema_decay;
  std::vector<std::size_t> hidden_dims = {64};
  std::size_t embed_dim = 32;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
  /// [n_features, hidden_dims..., embed_dim].
  std::vector<std::size_t> layer_dims(std::size_t n_features) const;
  /// False when lambda == 0 or use_clml is off.
  bool contrastive_enabled() const { return use_clml && lambda != 0.0; }
};

inline constexpr double kDefaultEmaDecay = 0.999;

/// Total objective on one batch, both terms taken against `effective`
/// (the observed labels after correction).
struct TotalLoss {
  double value = 0.0;
  double classification = 0.0;
  double contrastive = 0.0;
  Matrix grad_logits;
  /// lambda * contrastive gradient; zeros when the contrastive term is off.
  Matrix grad_z;
  std::size_t rows_without_positive = 0;
};

TotalLoss total_loss(const Matrix& logits, const Matrix& z, const LabelMatrix& effective,
                     const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  /// Batch means.
  double classification_loss = 0.0;
  double contrastive_loss = 0.0;
  /// Observed negatives flipped to positive, summed over the epoch's batches.
  std::size_t corrected_labels = 0;
  std::optional<MetricsReport> validation;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainResult {
  ModelParams params;
  std::optional<ModelParams> ema_params;
  TrainHistory history;
};

/// Minibatch training of classification loss + lambda * contrastive loss
/// with label correction. `validation`, when given, is evaluated against its
/// truth labels after every epoch. Warnings go to `log` when non-null.
/// Throws TrainingError when a batch loss is not finite.
TrainResult train(const Dataset& data, const Dataset* validation, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

/// Sigmoid probabilities for every row of `features`.
Matrix predict_probabilities(const ModelParams& params, const Matrix& features);

/// Metrics of the model's probabilities against `ds.truth`.
MetricsReport evaluate(const ModelParams& params, const Dataset& ds,
                       double threshold = kDefaultConfidenceThreshold);

/// One line per epoch:
///   epoch K cls_loss X clml_loss Y corrected N [map .. cp .. cr .. cf1 .. op .. or .. of1 ..]
/// Losses use shortest round-trip formatting, metrics four decimals.
std::string format_history(const TrainHistory& history);

}  // namespace clml
