#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "clml/linalg.hpp"
#include "clml/rng.hpp"

namespace clml {

/// Fully connected layer; `weight` is fan_in x fan_out, applied as x W + b.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Embedding network (tanh hidden layers, linear output of width D) and the
/// linear classifier head on top of the embedding.
struct ModelParams {
  /// [F, H1, ..., D].
  std::vector<std::size_t> layer_dims;
  std::vector<DenseLayer> layers;
  DenseLayer classifier;

  static ModelParams zeros(std::vector<std::size_t> layer_dims, std::size_t n_classes);
  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static ModelParams glorot(std::vector<std::size_t> layer_dims, std::size_t n_classes, Rng& rng);

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t embed_dim() const { return layer_dims.back(); }
  std::size_t n_classes() const { return classifier.bias.size(); }

  /// Throws DimensionError / InvalidInputError on inconsistent shapes or
  /// non-finite values.
  void validate() const;

  /// Every parameter tensor in serialization order: layer weights and biases
  /// front to back, then classifier weight and bias.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients share the parameter layout.
using ParamGrads = ModelParams;

struct ForwardCache {
  /// inputs[l] is the input of layer l; inputs[0] is the batch itself.
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
  Matrix z;
  Matrix logits;
};

/// Embedding pass only; `logits` is left empty.
ForwardCache embed_forward(const ModelParams& params, const Matrix& x);
Matrix classify(const ModelParams& params, const Matrix& z);
/// embed_forward followed by classify.
ForwardCache forward(const ModelParams& params, const Matrix& x);

/// Reverse pass. `grad_logits` flows through the classifier into the
/// embedding; `grad_z` enters at the embedding and reaches only the
/// embedding layers.
ParamGrads backward(const ModelParams& params, const ForwardCache& cache, const Matrix& grad_logits,
                    const Matrix& grad_z);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct AdamState {
  ParamGrads m;
  ParamGrads v;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state, const AdamConfig& cfg);

/// ema <- decay * ema + (1 - decay) * params. decay must lie in [0, 1).
void ema_update(ModelParams& ema, const ModelParams& params, double decay);

void save_checkpoint(const ModelParams& params, std::ostream& out);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(std::istream& in);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace clml
