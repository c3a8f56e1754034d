#pragma once

#include <cstdint>
#include <span>

#include "oddball/linalg.hpp"

namespace oddball {

struct NetworkShape {
  std::size_t inputs = 784;
  std::size_t hidden = 100;
  std::size_t outputs = 10;
};

inline constexpr NetworkShape kMnistShape{784, 100, 10};

enum class Activation { sigmoid, biased_sigmoid, relu };

// Offset applied inside the sigmoid: act(x) = sigma(x + bias_offset).
// The default was picked by a sweep over the training protocol; see README.
inline constexpr double kDefaultBiasOffset = 4.0;

struct ActivationKind {
  Activation kind = Activation::biased_sigmoid;
  double bias_offset = kDefaultBiasOffset;
};

enum class LossKind { cross_entropy, squared_error };

// Weights and biases of the two-layer net. w1 maps inputs->hidden,
// w2 maps hidden->outputs; biases start at zero.
struct ParameterSet {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  NetworkShape shape() const { return {w1.cols, w1.rows, w2.rows}; }

  static ParameterSet zeros(const NetworkShape& s);
};

// Throws std::invalid_argument unless the four components are mutually
// consistent and match `expect` exactly.
void validate_shape(const ParameterSet& p, const NetworkShape& expect);

// Same layout as ParameterSet; what backward() produces and SGD applies.
struct GradientSet {
  Matrix dw1;
  Vector db1;
  Matrix dw2;
  Vector db2;

  static GradientSet zeros(const NetworkShape& s);
  bool same_shape(const GradientSet& o) const;
};

struct LayerActivations {
  Vector input;        // copy of the presented input
  Vector hidden_pre;   // w1*input + b1
  Vector hidden_post;  // mask .* act(hidden_pre), or act(hidden_pre)
  Vector output_pre;   // w2*hidden_post + b2
  Vector output_prob;  // softmax(output_pre)
};

// Deterministic init: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
// biases zero. Same seed, same bits, on every run.
ParameterSet init_params(std::uint64_t seed, const NetworkShape& shape = kMnistShape);

// Numerically safe softmax (max subtraction). Exposed for tests.
void softmax_into(std::span<const double> z, std::span<double> out);

// Forward pass. `hidden_mask`, when present, is an inverted-dropout mask
// (entries 0 or 1/(1-rate)) applied to the hidden activations.
// Throws std::invalid_argument on shape mismatch or non-finite input.
void forward_into(const ParameterSet& p, std::span<const double> input,
                  const ActivationKind& act, const Vector* hidden_mask,
                  LayerActivations& out);
LayerActivations forward(const ParameterSet& p, std::span<const double> input,
                         const ActivationKind& act, const Vector* hidden_mask = nullptr);

// d(loss)/d(output_pre): p - y for cross-entropy, softmax-Jacobian-weighted
// residual for squared error. Building block of backward().
void output_delta(std::span<const double> output_prob, std::span<const double> target,
                  LossKind loss_kind, std::span<double> out);

// d(loss)/d(hidden_pre) given the output delta; applies the dropout mask and
// the activation derivative. Building block of backward().
void hidden_delta(const ParameterSet& p, std::span<const double> delta_out,
                  std::span<const double> hidden_pre, const ActivationKind& act,
                  const Vector* hidden_mask, std::span<double> out);

// Gradient of the configured loss w.r.t. every parameter, for the activations
// produced by forward() under the same params/activation/mask.
// Throws std::invalid_argument if `target` is not one-hot.
void backward_into(const ParameterSet& p, const LayerActivations& acts,
                   std::span<const double> target, const ActivationKind& act,
                   LossKind loss_kind, const Vector* hidden_mask, GradientSet& out);
GradientSet backward(const ParameterSet& p, const LayerActivations& acts,
                     std::span<const double> target, const ActivationKind& act,
                     LossKind loss_kind = LossKind::cross_entropy,
                     const Vector* hidden_mask = nullptr);

// Argmax over output_prob; ties resolve to the lowest index.
int predict(const LayerActivations& acts);

// cross_entropy: -log(max(p[target], 1e-12));
// squared_error: 0.5 * sum((p - y)^2) over the softmax outputs.
double loss(const LayerActivations& acts, std::span<const double> target,
            LossKind kind = LossKind::cross_entropy);

}  // namespace oddball
