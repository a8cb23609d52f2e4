#include "dwnet/network.hpp"

#include <cmath>
#include <string>

#include "dwnet/errors.hpp"

namespace dwnet {

std::string_view to_string(GammaInit init) {
  return init == GammaInit::ones ? "ones" : "truncated_normal";
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

namespace {

std::string layer_field(std::size_t i, const char* member) {
  return "layers[" + std::to_string(i) + "]." + member;
}

bool is_dense(const LayerSpec& layer) { return std::holds_alternative<DenseSpec>(layer); }

}  // namespace

void validate(const NetworkSpec& spec) {
  if (spec.input_shape.size() != 3) throw ValidationError("input_shape", "must be [H, W, channels]");
  for (auto extent : spec.input_shape) {
    if (extent == 0) throw ValidationError("input_shape", "extents must be positive");
  }
  if (spec.layers.empty()) throw ValidationError("layers", "at least one layer is required");
  if (!is_dense(spec.layers.back())) throw ValidationError("layers", "the output layer must be dense");

  bool seen_dense = false;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const bool last = i + 1 == spec.layers.size();
    if (const auto* dense = std::get_if<DenseSpec>(&spec.layers[i])) {
      seen_dense = true;
      if (dense->units == 0) throw ValidationError(layer_field(i, "units"), "must be positive");
      if (dense->activation == Activation::softmax && !last) {
        throw ValidationError(layer_field(i, "activation"), "softmax is only allowed on the output layer");
      }
    } else {
      const auto& conv = std::get<ConvSpec>(spec.layers[i]);
      if (seen_dense) throw ValidationError(layer_field(i, "type"), "conv layers must precede dense layers");
      if (conv.depth == 0) throw ValidationError(layer_field(i, "depth"), "must be positive");
      if (conv.window == 0) throw ValidationError(layer_field(i, "window"), "must be positive");
      if (conv.stride == 0) throw ValidationError(layer_field(i, "stride"), "must be positive");
      if (conv.activation == Activation::softmax) {
        throw ValidationError(layer_field(i, "activation"), "softmax is only allowed on the output layer");
      }
    }
  }

  const auto& out = std::get<DenseSpec>(spec.layers.back());
  const bool softmax_out = out.activation == Activation::softmax;
  if (softmax_out != (spec.loss == Loss::cross_entropy)) {
    throw ValidationError("loss", "cross_entropy requires a softmax output layer and softmax requires cross_entropy");
  }
  if (spec.loss == Loss::cross_entropy && out.units < 2) {
    throw ValidationError(layer_field(spec.layers.size() - 1, "units"), "cross_entropy needs at least 2 classes");
  }
  if (!(spec.learning_rate > 0.0) || !std::isfinite(spec.learning_rate)) {
    throw ValidationError("learning_rate", "must be a positive finite number");
  }
  if (spec.batch_size == 0) throw ValidationError("batch_size", "must be positive");
  const auto& adam = spec.optimizer.adam;
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ValidationError("optimizer.beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ValidationError("optimizer.beta2", "must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw ValidationError("optimizer.epsilon", "must be positive");
  if (!(spec.init.weight_sigma > 0.0) || !std::isfinite(spec.init.weight_sigma)) {
    throw ValidationError("init.weight_sigma", "must be a positive finite number");
  }
}

std::size_t num_classes(const NetworkSpec& spec) {
  return std::get<DenseSpec>(spec.layers.back()).units;
}

namespace {

NetworkSpec cnn_preset(std::string name, Shape input, double lr, std::size_t batch) {
  NetworkSpec spec;
  spec.name = std::move(name);
  spec.input_shape = std::move(input);
  spec.layers = {
      ConvSpec{4, 5, 1, Activation::relu},
      ConvSpec{8, 5, 2, Activation::relu},
      ConvSpec{12, 4, 2, Activation::relu},
      DenseSpec{200, Activation::relu, false},
      DenseSpec{80, Activation::relu, false},
      DenseSpec{10, Activation::softmax, false},
  };
  spec.loss = Loss::cross_entropy;
  spec.learning_rate = lr;
  spec.batch_size = batch;
  spec.iterations = 5000;
  return spec;
}

}  // namespace

NetworkSpec preset(std::string_view name) {
  if (name == "mnist-fnn") {
    NetworkSpec spec;
    spec.name = "mnist-fnn";
    spec.input_shape = {28, 28, 1};
    spec.layers = {
        DenseSpec{200, Activation::sigmoid, false},
        DenseSpec{100, Activation::sigmoid, false},
        DenseSpec{60, Activation::sigmoid, false},
        DenseSpec{30, Activation::sigmoid, false},
        DenseSpec{10, Activation::softmax, false},
    };
    spec.loss = Loss::cross_entropy;
    spec.learning_rate = 0.003;
    spec.batch_size = 100;
    spec.iterations = 5000;
    return spec;
  }
  if (name == "mnist-cnn") return cnn_preset("mnist-cnn", {28, 28, 1}, 0.0008, 100);
  if (name == "cifar10-cnn") return cnn_preset("cifar10-cnn", {32, 32, 3}, 0.0006, 200);
  throw ValidationError("preset", "unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() { return {"mnist-fnn", "mnist-cnn", "cifar10-cnn"}; }

NetworkSpec with_double_weight(NetworkSpec spec, bool enabled) {
  for (auto& layer : spec.layers) {
    if (auto* dense = std::get_if<DenseSpec>(&layer)) dense->double_weight = enabled;
  }
  return spec;
}

NetworkSpec with_hidden_units(NetworkSpec spec, const std::vector<std::size_t>& widths) {
  std::vector<LayerSpec> layers;
  std::optional<DenseSpec> first_hidden;
  for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
    if (const auto* dense = std::get_if<DenseSpec>(&spec.layers[i])) {
      if (!first_hidden) first_hidden = *dense;
    } else {
      layers.push_back(spec.layers[i]);
    }
  }
  const DenseSpec output = std::get<DenseSpec>(spec.layers.back());
  DenseSpec hidden = first_hidden.value_or(DenseSpec{0, Activation::sigmoid, output.double_weight});
  for (auto width : widths) {
    hidden.units = width;
    layers.push_back(hidden);
  }
  layers.push_back(output);
  spec.layers = std::move(layers);
  return spec;
}

bool same_except_double_weight(const NetworkSpec& a, const NetworkSpec& b) {
  return with_double_weight(a, false) == with_double_weight(b, false);
}

Model::Model(NetworkSpec spec, std::vector<Layer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {}

namespace {

Tensor flatten_batch(const Tensor& x) {
  if (x.rank() == 2) return x;
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

}  // namespace

Tensor Model::run_forward(const Tensor& x, std::vector<ForwardCache>* caches) const {
  Tensor current = x;
  ForwardCache scratch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    ForwardCache& cache = caches ? (*caches)[i] : scratch;
    if (const auto* dense = std::get_if<DenseLayer>(&layers_[i])) {
      current = dense_forward(dense->params, flatten_batch(current), dense->activation, cache);
    } else {
      const auto& conv = std::get<ConvLayer>(layers_[i]);
      if (current.rank() == 2 && i == 0) {
        const auto& in = spec_.input_shape;
        current = current.reshaped({current.dim(0), in[0], in[1], in[2]});
      }
      current = conv2d_forward(conv.params, current, conv.activation, cache);
    }
  }
  return current;
}

Tensor Model::predict(const Tensor& x) const { return run_forward(x, nullptr); }

double Model::loss(const Tensor& x, const Tensor& targets) const {
  std::vector<ForwardCache> caches(layers_.size());
  Tensor out = run_forward(x, &caches);
  const Tensor& scored = spec_.loss == Loss::cross_entropy ? caches.back().z : out;
  return loss_and_grad(spec_.loss, scored, targets).value;
}

std::vector<Tensor> Model::preactivations(const Tensor& x) const {
  std::vector<ForwardCache> caches(layers_.size());
  run_forward(x, &caches);
  std::vector<Tensor> out;
  for (auto& cache : caches) out.push_back(std::move(cache.z));
  return out;
}

double Model::loss_and_gradients(const Tensor& x, const Tensor& targets, std::vector<Tensor>& grads) {
  std::vector<ForwardCache> caches(layers_.size());
  Tensor out = run_forward(x, &caches);

  const bool fused = spec_.loss == Loss::cross_entropy;
  LossResult lr = loss_and_grad(spec_.loss, fused ? caches.back().z : out, targets);

  // Per-layer gradient tensors, filled back to front.
  std::vector<std::vector<Tensor>> per_layer(layers_.size());
  Tensor upstream = std::move(lr.grad);
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const bool from_z = fused && idx + 1 == layers_.size();
    if (const auto* dense = std::get_if<DenseLayer>(&layers_[idx])) {
      const bool input_grad = idx > 0;
      DenseGrads g = from_z ? dense_backward_from_preactivation(dense->params, caches[idx], upstream, input_grad)
                            : dense_backward(dense->params, caches[idx], dense->activation, upstream, input_grad);
      per_layer[idx].push_back(std::move(g.weights));
      if (g.gamma) per_layer[idx].push_back(std::move(*g.gamma));
      per_layer[idx].push_back(std::move(g.bias));
      upstream = std::move(g.input);
    } else {
      const auto& conv = std::get<ConvLayer>(layers_[idx]);
      if (upstream.shape() != caches[idx].z.shape()) upstream = upstream.reshaped(caches[idx].z.shape());
      ConvGrads g = conv2d_backward(conv.params, caches[idx], conv.activation, upstream);
      per_layer[idx].push_back(std::move(g.kernels));
      per_layer[idx].push_back(std::move(g.bias));
      upstream = std::move(g.input);
    }
  }

  grads.clear();
  for (auto& layer_grads : per_layer)
    for (auto& g : layer_grads) grads.push_back(std::move(g));
  return lr.value;
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + ".";
    if (auto* dense = std::get_if<DenseLayer>(&layers_[i])) {
      refs.push_back({prefix + "weights", &dense->params.weights});
      if (dense->params.gamma) refs.push_back({prefix + "gamma", &*dense->params.gamma});
      refs.push_back({prefix + "bias", &dense->params.bias});
    } else {
      auto& conv = std::get<ConvLayer>(layers_[i]);
      refs.push_back({prefix + "kernels", &conv.params.kernels});
      refs.push_back({prefix + "bias", &conv.params.bias});
    }
  }
  return refs;
}

std::vector<ConstParamRef> Model::parameters() const {
  std::vector<ConstParamRef> out;
  for (auto& ref : const_cast<Model*>(this)->parameters()) out.push_back({ref.name, ref.tensor});
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& ref : parameters()) n += ref.tensor->size();
  return n;
}

bool Model::operator==(const Model& other) const {
  if (!(spec_ == other.spec_)) return false;
  auto mine = parameters();
  auto theirs = other.parameters();
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].name != theirs[i].name || !(*mine[i].tensor == *theirs[i].tensor)) return false;
  }
  return true;
}

Model build_network(const NetworkSpec& spec, Rng& rng) {
  validate(spec);
  const std::uint64_t base = rng.next_u64();
  const double sigma = spec.init.weight_sigma;

  std::vector<Model::Layer> layers;
  Shape current = spec.input_shape;  // H x W x c while in the conv stack
  std::size_t flat = shape_size(current);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    Rng weight_rng(derive_seed(base, 2 * i));
    Rng gamma_rng(derive_seed(base, 2 * i + 1));
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      ConvParams params;
      params.kernels = draw_truncated_normal(weight_rng, {conv->window, conv->window, current[2], conv->depth}, 0.0,
                                             sigma);
      params.bias = Tensor::zeros({conv->depth});
      params.stride = conv->stride;
      current = {same_padding(current[0], conv->window, conv->stride).out,
                 same_padding(current[1], conv->window, conv->stride).out, conv->depth};
      flat = shape_size(current);
      layers.emplace_back(Model::ConvLayer{std::move(params), conv->activation});
    } else {
      const auto& dense = std::get<DenseSpec>(spec.layers[i]);
      DenseParams params;
      params.weights = draw_truncated_normal(weight_rng, {dense.units, flat}, 0.0, sigma);
      if (dense.double_weight) {
        params.gamma = spec.init.gamma_init == GammaInit::ones
                           ? Tensor::ones({dense.units, flat})
                           : draw_truncated_normal(gamma_rng, {dense.units, flat}, 0.0, sigma);
      }
      params.bias = Tensor::zeros({dense.units});
      flat = dense.units;
      layers.emplace_back(Model::DenseLayer{std::move(params), dense.activation});
    }
  }
  return Model(spec, std::move(layers));
}

}  // namespace dwnet
