#pragma once

#include <cstddef>
#include <vector>

#include "qgan/rng.hpp"
#include "qgan/tensor.hpp"

namespace qgan {

enum class Activation { LeakyRelu, Relu, Tanh, Sigmoid, Identity };

inline constexpr double kLeakyReluSlope = 0.2;

/// One affine layer: weight is [out, in] row-major, bias is [out].
struct Layer {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weight.shape()[1]; }
  std::size_t out_dim() const { return weight.shape()[0]; }
};

struct Mlp {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
};

/// Build an MLP with the given unit counts (dims.size() - 1 layers). Hidden
/// layers use `hidden`; the final layer uses `output`. Weights are drawn
/// uniformly with He limits for ReLU-family layers and Xavier limits
/// otherwise; biases start at zero.
Mlp make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output, Rng& rng);

/// Per-layer values cached by the forward pass for backprop.
struct ForwardCache {
  std::vector<Tensor> inputs;    // activation into each layer, [B, in]
  std::vector<Tensor> preacts;   // affine outputs before activation, [B, out]
  Tensor output;                 // final activations, [B, out]
};

/// Affine + activation chain over a [B, in] batch. Throws ShapeMismatch when
/// the batch width does not match the first layer.
Tensor forward(const Mlp& mlp, const Tensor& batch);
Tensor forward(const Mlp& mlp, const Tensor& batch, ForwardCache& cache);

/// Parameter and input gradients for a loss whose gradient w.r.t. the final
/// activations is `grad_output` (any mean-over-batch factor is the caller's).
struct Gradients {
  std::vector<Tensor> weight_grads;
  std::vector<Tensor> bias_grads;
  Tensor input_grad;
};

Gradients backward(const Mlp& mlp, const ForwardCache& cache, const Tensor& grad_output);

// ============================================================================
// Adam
// ============================================================================

struct AdamParams {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
  std::vector<Tensor> weight_m, weight_v;
  std::vector<Tensor> bias_m, bias_v;
  long long step = 0;

  static AdamState like(const Mlp& mlp);
};

void adam_update(Mlp& mlp, AdamState& state, const Gradients& grads, const AdamParams& params);

}  // namespace qgan
