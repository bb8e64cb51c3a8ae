#include "clml/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "clml/errors.hpp"
#include "clml/rng.hpp"
#include "clml/text_io.hpp"

namespace clml {

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  correction.validate();
  adam.validate();
  if (const auto* focal = std::get_if<FocalLoss>(&loss)) {
    if (!(focal->gamma >= 0.0) || !std::isfinite(focal->gamma)) {
      throw ConfigError("focal gamma must be finite and >= 0");
    }
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (ema_decay && !(*ema_decay >= 0.0 && *ema_decay < 1.0)) {
    throw ConfigError("ema decay must lie in [0,1)");
  }
  if (embed_dim < 1) throw ConfigError("embedding width must be >= 1");
  for (std::size_t h : hidden_dims)
    if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
}

std::vector<std::size_t> TrainConfig::layer_dims(std::size_t n_features) const {
  std::vector<std::size_t> dims{n_features};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(embed_dim);
  return dims;
}

TotalLoss total_loss(const Matrix& logits, const Matrix& z, const LabelMatrix& effective,
                     const TrainConfig& cfg) {
  LossOutput cls = make_loss(cfg.loss)(logits, effective);
  TotalLoss out;
  out.classification = cls.value;
  out.grad_logits = std::move(cls.grad_logits);
  out.value = cls.value;
  if (!cfg.contrastive_enabled()) {
    out.grad_z = Matrix(z.rows(), z.cols());
    return out;
  }
  ClmlTerms terms = clml_terms(z, effective, cfg.sv_threshold);
  out.contrastive = terms.loss;
  out.value += cfg.lambda * terms.loss;
  out.grad_z = scale(terms.gradient, cfg.lambda);
  out.rows_without_positive = terms.rows_without_positive;
  return out;
}

Matrix predict_probabilities(const ModelParams& params, const Matrix& features) {
  return sigmoid(forward(params, features).logits);
}

MetricsReport evaluate(const ModelParams& params, const Dataset& ds, double threshold) {
  if (params.input_dim() != ds.n_features()) {
    throw DimensionError("evaluate: model expects " + std::to_string(params.input_dim()) +
                         " features, dataset has " + std::to_string(ds.n_features()));
  }
  if (params.n_classes() != ds.n_classes()) {
    throw DimensionError("evaluate: model predicts " + std::to_string(params.n_classes()) +
                         " classes, dataset has " + std::to_string(ds.n_classes()));
  }
  return report(predict_probabilities(params, ds.features), ds.truth, threshold);
}

TrainResult train(const Dataset& data, const Dataset* validation, const TrainConfig& cfg,
                  std::ostream* log) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.n_samples();
  if (cfg.batch_size > n) {
    throw ConfigError("batch size " + std::to_string(cfg.batch_size) + " exceeds the " +
                      std::to_string(n) + " training rows");
  }
  if (validation) {
    validation->validate();
    if (validation->n_features() != data.n_features() || validation->n_classes() != data.n_classes()) {
      throw DimensionError("train: validation set shape differs from training set");
    }
  }

  Rng init_rng = Rng::derive(cfg.seed, "init");
  Rng shuffle_rng = Rng::derive(cfg.seed, "shuffle");

  TrainResult result;
  result.params = ModelParams::glorot(cfg.layer_dims(data.n_features()), data.n_classes(), init_rng);
  if (cfg.ema_decay) result.ema_params = result.params;
  AdamState adam = AdamState::for_params(result.params);

  const std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> batch;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                   order.begin() + static_cast<std::ptrdiff_t>(end));

      const Matrix x = row_select(data.features, batch);
      const LabelMatrix observed = data.observed.select_rows(batch);
      const ForwardCache cache = forward(result.params, x);
      if (!cache.z.all_finite() || !cache.logits.all_finite()) {
        throw TrainingError("non-finite embedding at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1) + " of " + std::to_string(n_batches));
      }

      LabelMatrix effective = observed;
      if (cfg.contrastive_enabled() && cfg.label_correction) {
        effective = effective_labels(observed, sigmoid(cache.logits), epoch, cfg.correction);
        record.corrected_labels += count_corrections(observed, effective);
      }

      const TotalLoss loss = total_loss(cache.logits, cache.z, effective, cfg);
      if (!std::isfinite(loss.value) || !loss.grad_z.all_finite() || !loss.grad_logits.all_finite()) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1) + " of " + std::to_string(n_batches));
      }
      if (loss.rows_without_positive > 0 && log) {
        *log << "warning: epoch " << epoch << " batch " << b + 1 << ": " << loss.rows_without_positive
             << " row(s) without a positive label; contrastive loss may be negative\n";
      }
      record.classification_loss += loss.classification;
      record.contrastive_loss += loss.contrastive;

      const ParamGrads grads = backward(result.params, cache, loss.grad_logits, loss.grad_z);
      adam_step(result.params, grads, adam, cfg.adam);
      if (result.ema_params) ema_update(*result.ema_params, result.params, *cfg.ema_decay);
    }
    record.classification_loss /= static_cast<double>(n_batches);
    record.contrastive_loss /= static_cast<double>(n_batches);
    if (validation) record.validation = evaluate(result.params, *validation);
    result.history.epochs.push_back(std::move(record));
  }
  return result;
}

std::string format_history(const TrainHistory& history) {
  std::string out;
  char buf[256];
  for (const auto& e : history.epochs) {
    out += "epoch " + std::to_string(e.epoch) + " cls_loss " + text::format_double(e.classification_loss) +
           " clml_loss " + text::format_double(e.contrastive_loss) + " corrected " +
           std::to_string(e.corrected_labels);
    if (e.validation) {
      const auto& r = *e.validation;
      std::snprintf(buf, sizeof buf, " map %.4f cp %.4f cr %.4f cf1 %.4f op %.4f or %.4f of1 %.4f", r.map,
                    r.cp, r.cr, r.cf1, r.op, r.or_, r.of1);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace clml
