#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dwnet/layers.hpp"
#include "dwnet/rng.hpp"
#include "dwnet/tensor.hpp"

namespace dwnet {

struct DenseSpec {
  std::size_t units = 0;
  Activation activation = Activation::sigmoid;
  bool double_weight = false;

  bool operator==(const DenseSpec&) const = default;
};

struct ConvSpec {
  std::size_t depth = 0;
  std::size_t window = 0;
  std::size_t stride = 1;
  Activation activation = Activation::relu;

  bool operator==(const ConvSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, ConvSpec>;

enum class GammaInit { truncated_normal, ones };
enum class OptimizerKind { adam, sgd };

std::string_view to_string(GammaInit init);
std::string_view to_string(OptimizerKind kind);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  AdamConfig adam;

  bool operator==(const OptimizerSpec&) const = default;
};

struct InitSpec {
  double weight_sigma = 0.1;
  GammaInit gamma_init = GammaInit::truncated_normal;

  bool operator==(const InitSpec&) const = default;
};

/// Declarative architecture plus training hyperparameters.
///
/// Convolutional layers, if any, come first; the first dense layer sees the
/// conv output flattened row-major over (H, W, c). The last layer is dense
/// and its width is the number of classes.
struct NetworkSpec {
  std::string name;
  Shape input_shape;  // H x W x c
  std::vector<LayerSpec> layers;
  Loss loss = Loss::cross_entropy;
  double learning_rate = 0.001;
  std::size_t batch_size = 100;
  OptimizerSpec optimizer;
  InitSpec init;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;

  bool operator==(const NetworkSpec&) const = default;
};

/// Throws ValidationError naming the first offending field.
void validate(const NetworkSpec& spec);

std::size_t num_classes(const NetworkSpec& spec);

/// Hard-coded architectures: "mnist-fnn", "mnist-cnn", "cifar10-cnn".
NetworkSpec preset(std::string_view name);
std::vector<std::string> preset_names();

/// Sets the double-weight flag on every dense layer.
NetworkSpec with_double_weight(NetworkSpec spec, bool enabled);
/// Replaces the hidden dense layers with the given widths, keeping the
/// activation of the first hidden dense layer and the output layer as is.
NetworkSpec with_hidden_units(NetworkSpec spec, const std::vector<std::size_t>& widths);
/// True if the specs are equal once double-weight flags are ignored.
bool same_except_double_weight(const NetworkSpec& a, const NetworkSpec& b);

/// A named view of one parameter tensor.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

struct ConstParamRef {
  std::string name;
  const Tensor* tensor;
};

class Model {
 public:
  struct DenseLayer {
    DenseParams params;
    Activation activation;
  };
  struct ConvLayer {
    ConvParams params;
    Activation activation;
  };
  using Layer = std::variant<DenseLayer, ConvLayer>;

  Model(NetworkSpec spec, std::vector<Layer> layers);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  /// Network output (class probabilities for cross-entropy nets) without
  /// touching the forward caches. x: [batch x H x W x c] or [batch x features].
  Tensor predict(const Tensor& x) const;

  /// Forward + backward on one batch; gradients come back in parameters()
  /// order. Returns the batch-mean loss.
  double loss_and_gradients(const Tensor& x, const Tensor& targets, std::vector<Tensor>& grads);
  /// Loss only.
  double loss(const Tensor& x, const Tensor& targets) const;
  /// Pre-activation z of every layer for input x.
  std::vector<Tensor> preactivations(const Tensor& x) const;

  /// Parameters in a fixed order: per layer weights, gamma (double-weight
  /// dense only), bias; conv layers contribute kernels, bias.
  std::vector<ParamRef> parameters();
  std::vector<ConstParamRef> parameters() const;
  std::size_t parameter_count() const;

  bool operator==(const Model& other) const;

 private:
  Tensor run_forward(const Tensor& x, std::vector<ForwardCache>* caches) const;

  NetworkSpec spec_;
  std::vector<Layer> layers_;
};

/// Allocates and initializes every parameter.
///
/// One 64-bit draw from `rng` becomes the base seed; layer i takes its
/// weights/kernels from stream derive_seed(base, 2i) and its gamma from
/// stream derive_seed(base, 2i + 1). A standard and a double-weight network
/// built from equal rng states therefore share their weight matrices.
Model build_network(const NetworkSpec& spec, Rng& rng);

}  // namespace dwnet
