#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "samlab/autodiff.hpp"
#include "samlab/error.hpp"
#include "samlab/objective.hpp"
#include "samlab/random.hpp"
#include "samlab/tensor.hpp"

namespace samlab {

enum class Activation { Identity, Relu, Tanh };
enum class Head { SoftmaxCrossEntropy, HalfSquaredError };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline std::string to_string(Head h) {
  return h == Head::SoftmaxCrossEntropy ? "softmax_xent" : "half_mse";
}

/// Affine layer y = act(x W + b), with W stored (inputs x outputs).
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  bool bias = true;
  Activation activation = Activation::Identity;
};

struct ModelSpec {
  std::vector<DenseLayer> layers;
  Head head = Head::SoftmaxCrossEntropy;

  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t output_width() const { return layers.empty() ? 0 : layers.back().outputs; }

  /// Throws unless adjacent widths agree.
  void validate() const {
    if (layers.empty()) throw ShapeError("model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].inputs == 0 || layers[i].outputs == 0) {
        throw ShapeError("layer dense" + std::to_string(i) + " has zero width");
      }
      if (i > 0 && layers[i].inputs != layers[i - 1].outputs) {
        throw ShapeError("layer dense" + std::to_string(i) + " expects " +
                         std::to_string(layers[i].inputs) + " inputs, previous layer emits " +
                         std::to_string(layers[i - 1].outputs));
      }
    }
  }

  Layout layout() const {
    Layout out;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const std::string name = "dense" + std::to_string(i);
      out.push_back({name + ".weight", {l.inputs, l.outputs}, offset});
      offset += l.inputs * l.outputs;
      if (l.bias) {
        out.push_back({name + ".bias", {l.outputs}, offset});
        offset += l.outputs;
      }
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.inputs * l.outputs + (l.bias ? l.outputs : 0);
    return n;
  }
};

/// Multilayer perceptron: every hidden layer uses `activation`, the output layer
/// is affine.
inline ModelSpec make_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden,
                          std::size_t outputs, Activation activation = Activation::Relu,
                          Head head = Head::SoftmaxCrossEntropy) {
  ModelSpec spec;
  spec.head = head;
  std::size_t prev = inputs;
  for (std::size_t h : hidden) {
    spec.layers.push_back({prev, h, true, activation});
    prev = h;
  }
  spec.layers.push_back({prev, outputs, true, Activation::Identity});
  spec.validate();
  return spec;
}

/// Features plus either class labels (softmax head) or dense targets. A
/// half-MSE head with no targets regresses onto one-hot labels.
struct Batch {
  Tensor features;
  std::vector<int> labels;
  std::optional<Tensor> targets;

  std::size_t size() const { return features.rows(); }
};

/// He-uniform weights for ReLU layers, Glorot-uniform otherwise; zero biases.
inline ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParameterVector params(spec.layout());
  Rng rng(seed);
  auto values = params.values();
  std::size_t offset = 0;
  for (const auto& l : spec.layers) {
    const double fan_in = static_cast<double>(l.inputs);
    const double fan_out = static_cast<double>(l.outputs);
    const double limit = l.activation == Activation::Relu ? std::sqrt(6.0 / fan_in)
                                                          : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < l.inputs * l.outputs; ++i) values[offset + i] = dist(rng);
    offset += l.inputs * l.outputs + (l.bias ? l.outputs : 0);
  }
  return params;
}

namespace detail {

inline void check_params(const ModelSpec& spec, std::span<const double> params) {
  if (params.size() != spec.parameter_count()) {
    throw LengthError("parameter vector has " + std::to_string(params.size()) +
                      " values, model expects " + std::to_string(spec.parameter_count()));
  }
}

/// Records the network on a tape and returns the output (logits) node.
inline ad::Var record_network(ad::Tape& tape, const ModelSpec& spec,
                              std::span<const double> params, const Tensor& features) {
  spec.validate();
  check_params(spec, params);
  if (features.cols() != spec.input_width()) {
    throw ShapeError("layer dense0: batch has " + std::to_string(features.cols()) +
                     " features, layer expects " + std::to_string(spec.input_width()));
  }
  ad::Var x = tape.constant(features);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const std::string name = "dense" + std::to_string(i);
    try {
      const auto w = params.subspan(offset, l.inputs * l.outputs);
      ad::Var W = tape.parameter(Tensor({l.inputs, l.outputs}, {w.begin(), w.end()}), offset);
      offset += l.inputs * l.outputs;
      x = tape.matmul(x, W);
      if (l.bias) {
        const auto b = params.subspan(offset, l.outputs);
        ad::Var B = tape.parameter(Tensor({l.outputs}, {b.begin(), b.end()}), offset);
        offset += l.outputs;
        x = tape.add_bias(x, B);
      }
      if (l.activation == Activation::Relu) x = tape.relu(x);
      if (l.activation == Activation::Tanh) x = tape.tanh(x);
    } catch (const NumericError& e) {
      throw NumericError("layer " + name + ": " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + name + ": " + e.what());
    }
  }
  return x;
}

inline Tensor regression_targets(const ModelSpec& spec, const Batch& batch) {
  if (batch.targets) return *batch.targets;
  Tensor t = Tensor::matrix(batch.size(), spec.output_width());
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    if (y >= spec.output_width()) throw ShapeError("head: label outside output width");
    t(i, y) = 1.0;
  }
  return t;
}

inline ad::Var record_loss(ad::Tape& tape, const ModelSpec& spec, std::span<const double> params,
                           const Batch& batch) {
  if (batch.size() == 0) throw ShapeError("empty batch");
  ad::Var out = record_network(tape, spec, params, batch.features);
  try {
    if (spec.head == Head::SoftmaxCrossEntropy) {
      return tape.softmax_cross_entropy(out, batch.labels);
    }
    return tape.half_squared_error(out, regression_targets(spec, batch));
  } catch (const Error& e) {
    throw ShapeError(std::string("head ") + to_string(spec.head) + ": " + e.what());
  }
}

}  // namespace detail

/// Mean loss of the model over the batch.
inline double forward(const ModelSpec& spec, std::span<const double> params, const Batch& batch) {
  ad::Tape tape;
  return tape.value(detail::record_loss(tape, spec, params, batch)).data()[0];
}

inline LossGradient loss_and_grad(const ModelSpec& spec, std::span<const double> params,
                                  const Batch& batch) {
  ad::Tape tape;
  ad::Var loss = detail::record_loss(tape, spec, params, batch);
  LossGradient out{tape.value(loss).data()[0], std::vector<double>(params.size(), 0.0)};
  tape.backward(loss, out.gradient);
  return out;
}

/// Network outputs before the head, one row per example.
inline Tensor logits(const ModelSpec& spec, std::span<const double> params,
                     const Tensor& features) {
  ad::Tape tape;
  return tape.value(detail::record_network(tape, spec, params, features));
}

/// Fraction of examples whose arg-max output equals the label.
inline double accuracy(const ModelSpec& spec, std::span<const double> params, const Batch& batch) {
  if (batch.size() == 0) return 0.0;
  const Tensor out = logits(spec, params, batch.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.cols(); ++j) {
      if (out(i, j) > out(i, best)) best = j;
    }
    if (static_cast<int>(best) == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(out.rows());
}

/// A model bound to one batch, viewed as an Objective over the flat
/// parameters. Holds references: spec and batch must outlive it.
class ModelObjective {
 public:
  ModelObjective(const ModelSpec& spec, const Batch& batch) : spec_(&spec), batch_(&batch) {}

  double loss(std::span<const double> w) const { return forward(*spec_, w, *batch_); }
  LossGradient loss_and_grad(std::span<const double> w) const {
    return samlab::loss_and_grad(*spec_, w, *batch_);
  }

  const ModelSpec& spec() const noexcept { return *spec_; }
  const Batch& batch() const noexcept { return *batch_; }

 private:
  const ModelSpec* spec_;
  const Batch* batch_;
};

static_assert(Objective<ModelObjective>);

}  // namespace samlab
