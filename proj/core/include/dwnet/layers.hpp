#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "dwnet/tensor.hpp"

namespace dwnet {

enum class Activation { sigmoid, relu, softmax, linear };
enum class Loss { cross_entropy, sse };

std::string_view to_string(Activation kind);
std::string_view to_string(Loss kind);
Activation parse_activation(std::string_view name);
Loss parse_loss(std::string_view name);

/// Fully connected layer parameters. With `gamma` present the layer is a
/// double-weight layer and its effective weight matrix is weights * gamma
/// (element-wise); otherwise the effective matrix is `weights`.
///
/// weights, gamma: [units x inputs]; bias: [units]. The bias is never
/// double-weighted.
struct DenseParams {
  Tensor weights;
  std::optional<Tensor> gamma;
  Tensor bias;

  bool double_weight() const noexcept { return gamma.has_value(); }
  std::size_t units() const { return weights.dim(0); }
  std::size_t inputs() const { return weights.dim(1); }
  Tensor effective_weights() const;
};

struct DenseGrads {
  Tensor weights;
  std::optional<Tensor> gamma;
  Tensor bias;
  Tensor input;
};

/// 2-D convolution with SAME padding. kernels: [kh x kw x c_in x c_out].
struct ConvParams {
  Tensor kernels;
  Tensor bias;
  std::size_t stride = 1;

  std::size_t window_h() const { return kernels.dim(0); }
  std::size_t window_w() const { return kernels.dim(1); }
  std::size_t in_channels() const { return kernels.dim(2); }
  std::size_t out_channels() const { return kernels.dim(3); }
};

struct ConvGrads {
  Tensor kernels;
  Tensor bias;
  Tensor input;
};

/// Values one forward pass leaves behind for the matching backward pass.
struct ForwardCache {
  Tensor input;
  Tensor z;  // pre-activation
  Tensor a;  // activation output
  bool consumed = false;

  bool ready() const noexcept { return !z.empty() && !consumed; }
};

// Activations. softmax is row-wise over a rank-2 tensor; the others are
// element-wise over any shape.
Tensor activation_apply(Activation kind, const Tensor& z);
/// Element-wise derivative phi'(z). relu'(0) is 0. Not defined for softmax.
Tensor activation_grad(Activation kind, const Tensor& z);
/// dE/dz given dE/da. Handles softmax through its Jacobian.
Tensor activation_backward(Activation kind, const Tensor& z, const Tensor& a, const Tensor& upstream);

struct LossResult {
  double value = 0.0;
  Tensor grad;
};

/// Batch-mean loss.
///   sse:           E = mean_b 1/2 sum_j (yhat - y)^2, grad w.r.t. yhat.
///   cross_entropy: softmax fused in, input is logits, grad w.r.t. logits
///                  equals (softmax(z) - y) / batch.
LossResult loss_and_grad(Loss kind, const Tensor& output, const Tensor& target);

/// z = x V^T + b, out = phi(z). x: [batch x inputs].
Tensor dense_forward(const DenseParams& params, const Tensor& x, Activation act, ForwardCache& cache);
/// Backward from dE/d(output). With input_grad false, DenseGrads::input is
/// left empty (first layer of a network).
DenseGrads dense_backward(const DenseParams& params, ForwardCache& cache, Activation act, const Tensor& upstream,
                          bool input_grad = true);
/// Backward from dE/dz (used when the loss already folded in the activation).
DenseGrads dense_backward_from_preactivation(const DenseParams& params, ForwardCache& cache, const Tensor& delta,
                                             bool input_grad = true);

/// Output spatial extent and leading pad for SAME padding.
struct SamePadding {
  std::size_t out;
  std::size_t pad_before;
};
SamePadding same_padding(std::size_t in, std::size_t window, std::size_t stride);

/// Cross-correlation (no kernel flip) + bias, then phi. x: [batch x H x W x c_in].
Tensor conv2d_forward(const ConvParams& params, const Tensor& x, Activation act, ForwardCache& cache);
ConvGrads conv2d_backward(const ConvParams& params, ForwardCache& cache, Activation act, const Tensor& upstream);
ConvGrads conv2d_backward_from_preactivation(const ConvParams& params, ForwardCache& cache, const Tensor& delta);

}  // namespace dwnet
