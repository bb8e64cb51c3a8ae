#include "clml/model.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "clml/errors.hpp"
#include "clml/text_io.hpp"

namespace clml {

namespace {

constexpr const char* kCheckpointMagic = "clml-checkpoint v1";

DenseLayer zero_layer(std::size_t fan_in, std::size_t fan_out) {
  return DenseLayer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
}

void fill_glorot(DenseLayer& layer, Rng& rng) {
  const double fan = static_cast<double>(layer.weight.rows() + layer.weight.cols());
  const double limit = std::sqrt(6.0 / fan);
  for (double& w : layer.weight.data()) w = rng.uniform(-limit, limit);
}

void check_dims(const std::vector<std::size_t>& layer_dims, std::size_t n_classes) {
  if (layer_dims.size() < 2) throw DimensionError("model needs at least [input, embedding] dims");
  for (std::size_t d : layer_dims)
    if (d == 0) throw DimensionError("model layer widths must be positive");
  if (n_classes == 0) throw DimensionError("model needs at least one class");
}

// x W + b, broadcasting b over rows.
Matrix affine(const Matrix& x, const DenseLayer& layer) {
  Matrix out = matmul(x, layer.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
  }
  return out;
}

void accumulate_layer_grad(DenseLayer& grad, const Matrix& input, const Matrix& delta) {
  grad.weight = matmul(transpose(input), delta);
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    auto row = delta.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) grad.bias[j] += row[j];
  }
}

void require_same_layout(const ModelParams& a, const ModelParams& b, const char* op) {
  if (a.layer_dims != b.layer_dims || a.n_classes() != b.n_classes()) {
    throw DimensionError(std::string(op) + ": parameter layouts differ");
  }
}

}  // namespace

ModelParams ModelParams::zeros(std::vector<std::size_t> layer_dims, std::size_t n_classes) {
  check_dims(layer_dims, n_classes);
  ModelParams p;
  p.layer_dims = std::move(layer_dims);
  for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l)
    p.layers.push_back(zero_layer(p.layer_dims[l], p.layer_dims[l + 1]));
  p.classifier = zero_layer(p.layer_dims.back(), n_classes);
  return p;
}

ModelParams ModelParams::glorot(std::vector<std::size_t> layer_dims, std::size_t n_classes, Rng& rng) {
  ModelParams p = zeros(std::move(layer_dims), n_classes);
  for (auto& layer : p.layers) fill_glorot(layer, rng);
  fill_glorot(p.classifier, rng);
  return p;
}

void ModelParams::validate() const {
  check_dims(layer_dims, n_classes());
  if (layers.size() + 1 != layer_dims.size()) throw DimensionError("model: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() != layer_dims[l] || layer.weight.cols() != layer_dims[l + 1] ||
        layer.bias.size() != layer_dims[l + 1]) {
      throw DimensionError("model: layer " + std::to_string(l) + " does not match layer_dims");
    }
  }
  if (classifier.weight.rows() != embed_dim() || classifier.weight.cols() != n_classes()) {
    throw DimensionError("model: classifier does not match embedding width");
  }
  for (const auto& t : tensors())
    for (double x : t)
      if (!std::isfinite(x)) throw InvalidInputError("model: non-finite parameter");
}

std::vector<std::span<double>> ModelParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    out.emplace_back(layer.weight.data());
    out.emplace_back(layer.bias);
  }
  out.emplace_back(classifier.weight.data());
  out.emplace_back(classifier.bias);
  return out;
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    out.emplace_back(layer.weight.data());
    out.emplace_back(layer.bias);
  }
  out.emplace_back(classifier.weight.data());
  out.emplace_back(classifier.bias);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

ForwardCache embed_forward(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim()) {
    throw DimensionError("embed_forward: input has " + std::to_string(x.cols()) +
                         " features, model expects " + std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.inputs.push_back(x);
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix pre = affine(cache.inputs.back(), params.layers[l]);
    if (l + 1 < n_layers) {
      Matrix act = pre;
      for (double& v : act.data()) v = std::tanh(v);
      cache.inputs.push_back(std::move(act));
    } else {
      cache.z = pre;
    }
    cache.pre_activations.push_back(std::move(pre));
  }
  return cache;
}

Matrix classify(const ModelParams& params, const Matrix& z) {
  if (z.cols() != params.embed_dim()) {
    throw DimensionError("classify: embedding has " + std::to_string(z.cols()) +
                         " columns, classifier expects " + std::to_string(params.embed_dim()));
  }
  return affine(z, params.classifier);
}

ForwardCache forward(const ModelParams& params, const Matrix& x) {
  ForwardCache cache = embed_forward(params, x);
  cache.logits = classify(params, cache.z);
  return cache;
}

ParamGrads backward(const ModelParams& params, const ForwardCache& cache, const Matrix& grad_logits,
                    const Matrix& grad_z) {
  const std::size_t n = cache.z.rows();
  if (grad_logits.rows() != n || grad_logits.cols() != params.n_classes()) {
    throw DimensionError("backward: grad_logits shape does not match the batch");
  }
  if (grad_z.rows() != n || grad_z.cols() != params.embed_dim()) {
    throw DimensionError("backward: grad_z shape does not match the embedding");
  }
  if (cache.pre_activations.size() != params.layers.size()) {
    throw DimensionError("backward: cache does not belong to this model");
  }

  ParamGrads grads = ModelParams::zeros(params.layer_dims, params.n_classes());
  accumulate_layer_grad(grads.classifier, cache.z, grad_logits);

  Matrix upstream = add(matmul(grad_logits, transpose(params.classifier.weight)), grad_z);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    Matrix delta = std::move(upstream);
    if (l + 1 < params.layers.size()) {
      // tanh'(pre) = 1 - act^2, and act is the next layer's input.
      const auto act = cache.inputs[l + 1].data();
      auto d = delta.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - act[i] * act[i];
    }
    accumulate_layer_grad(grads.layers[l], cache.inputs[l], delta);
    if (l > 0) upstream = matmul(delta, transpose(params.layers[l].weight));
  }
  return grads;
}

void AdamConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

AdamState AdamState::for_params(const ModelParams& params) {
  return AdamState{ModelParams::zeros(params.layer_dims, params.n_classes()),
                   ModelParams::zeros(params.layer_dims, params.n_classes()), 0};
}

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state, const AdamConfig& cfg) {
  require_same_layout(params, grads, "adam_step");
  require_same_layout(params, state.m, "adam_step");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = cfg.beta1 * m[k][i] + (1.0 - cfg.beta1) * gi;
      v[k][i] = cfg.beta2 * v[k][i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      p[k][i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void ema_update(ModelParams& ema, const ModelParams& params, double decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("ema decay must lie in [0,1)");
  require_same_layout(ema, params, "ema_update");
  auto e = ema.tensors();
  const auto p = params.tensors();
  for (std::size_t k = 0; k < e.size(); ++k)
    for (std::size_t i = 0; i < e[k].size(); ++i)
      e[k][i] = decay * e[k][i] + (1.0 - decay) * p[k][i];
}

// --- checkpoint I/O -----------------------------------------------------------
//
//   clml-checkpoint v1
//   layer_dims F H1 ... D
//   classes C
//   then one line per tensor, in ModelParams::tensors() order, each holding
//   the tensor's values (row-major) in shortest round-trip decimal form.

void save_checkpoint(const ModelParams& params, std::ostream& out) {
  params.validate();
  out << kCheckpointMagic << '\n' << "layer_dims";
  for (std::size_t d : params.layer_dims) out << ' ' << d;
  out << '\n' << "classes " << params.n_classes() << '\n';
  for (const auto& t : params.tensors()) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out << ' ';
      out << text::format_double(t[i]);
    }
    out << '\n';
  }
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(params, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelParams load_checkpoint(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!text::read_line(in, line, line_no) || line != kCheckpointMagic) {
    throw ParseError(line_no == 0 ? 1 : line_no, "not a checkpoint (missing '" +
                                                     std::string(kCheckpointMagic) + "')");
  }

  if (!text::read_line(in, line, line_no)) throw ParseError(line_no + 1, "missing layer_dims line");
  auto fields = text::split_fields(line);
  if (fields.size() < 3 || fields[0] != "layer_dims") {
    throw ParseError(line_no, "expected 'layer_dims' followed by at least two widths");
  }
  std::vector<std::size_t> dims;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    dims.push_back(text::parse_count(fields[i], line_no));
    if (dims.back() == 0) throw ParseError(line_no, "layer width must be positive");
  }

  if (!text::read_line(in, line, line_no)) throw ParseError(line_no + 1, "missing classes line");
  fields = text::split_fields(line);
  if (fields.size() != 2 || fields[0] != "classes") throw ParseError(line_no, "expected 'classes C'");
  const std::size_t n_classes = text::parse_count(fields[1], line_no);
  if (n_classes == 0) throw ParseError(line_no, "class count must be positive");

  ModelParams params = ModelParams::zeros(std::move(dims), n_classes);
  for (auto& tensor : params.tensors()) {
    if (!text::read_line(in, line, line_no)) throw ParseError(line_no + 1, "truncated checkpoint");
    fields = text::split_fields(line);
    if (fields.size() != tensor.size()) {
      throw ParseError(line_no, "expected " + std::to_string(tensor.size()) + " values, found " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < tensor.size(); ++i) tensor[i] = text::parse_double(fields[i], line_no);
  }
  while (text::read_line(in, line, line_no)) {
    if (!text::split_fields(line).empty()) throw ParseError(line_no, "unexpected trailing content");
  }
  return params;
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace clml
