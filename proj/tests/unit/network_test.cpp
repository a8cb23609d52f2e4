#include <gtest/gtest.h>

#include "dwnet/dwnet.hpp"
#include "support/fixtures.hpp"

using namespace dwnet;

namespace {

std::vector<std::size_t> dense_widths(const NetworkSpec& spec) {
  std::vector<std::size_t> out;
  for (const auto& l : spec.layers) {
    if (const auto* d = std::get_if<DenseSpec>(&l)) out.push_back(d->units);
  }
  return out;
}

}  // namespace

TEST(Presets, MnistFnnWidths) {
  const NetworkSpec spec = preset("mnist-fnn");
  EXPECT_EQ(spec.input_shape, (Shape{28, 28, 1}));
  EXPECT_EQ(dense_widths(spec), (std::vector<std::size_t>{200, 100, 60, 30, 10}));
  EXPECT_EQ(spec.learning_rate, 0.003);
  EXPECT_EQ(spec.batch_size, 100u);
  Rng rng(1);
  const Model model = build_network(spec, rng);
  const auto params = model.parameters();
  EXPECT_EQ(params[0].tensor->shape(), (Shape{200, 784}));
  EXPECT_EQ(params.back().tensor->shape(), (Shape{10}));
}

TEST(Presets, ConvolutionalLayouts) {
  for (const char* name : {"mnist-cnn", "cifar10-cnn"}) {
    const NetworkSpec spec = preset(name);
    std::vector<std::size_t> depths, windows, strides;
    for (const auto& l : spec.layers) {
      if (const auto* c = std::get_if<ConvSpec>(&l)) {
        depths.push_back(c->depth);
        windows.push_back(c->window);
        strides.push_back(c->stride);
      }
    }
    EXPECT_EQ(depths, (std::vector<std::size_t>{4, 8, 12})) << name;
    EXPECT_EQ(windows, (std::vector<std::size_t>{5, 5, 4})) << name;
    EXPECT_EQ(strides, (std::vector<std::size_t>{1, 2, 2})) << name;
    EXPECT_EQ(dense_widths(spec), (std::vector<std::size_t>{200, 80, 10})) << name;
  }
  EXPECT_EQ(preset("mnist-cnn").learning_rate, 0.0008);
  EXPECT_EQ(preset("cifar10-cnn").learning_rate, 0.0006);
  EXPECT_EQ(preset("cifar10-cnn").batch_size, 200u);
  // 28 -> 28 -> 14 -> 7 spatially, 7 * 7 * 12 features into the first dense layer
  Rng rng(2);
  const Model model = build_network(preset("mnist-cnn"), rng);
  EXPECT_EQ(std::get<Model::DenseLayer>(model.layers()[3]).params.weights.shape(), (Shape{200, 588}));
  EXPECT_THROW(preset("imagenet"), ValidationError);
}

TEST(BuildNetwork, SameSeedSameParameters) {
  const NetworkSpec spec = with_double_weight(preset("mnist-cnn"), true);
  Rng a(99), b(99);
  EXPECT_TRUE(build_network(spec, a) == build_network(spec, b));
}

TEST(BuildNetwork, InitialisationContract) {
  const NetworkSpec spec = with_double_weight(with_hidden_units(preset("mnist-fnn"), {20, 10}), true);
  Rng rng(5);
  const Model model = build_network(spec, rng);
  for (const auto& p : model.parameters()) {
    const bool is_bias = p.name.find("bias") != std::string::npos;
    for (double v : p.tensor->values()) {
      if (is_bias) {
        ASSERT_EQ(v, 0.0) << p.name;
      } else {
        ASSERT_LT(std::abs(v), 0.2) << p.name;
      }
    }
  }
}

TEST(BuildNetwork, StandardAndDoubleWeightShareWeights) {
  const NetworkSpec a = with_hidden_units(preset("mnist-fnn"), {20, 10});
  const NetworkSpec b = with_double_weight(a, true);
  Rng ra(7), rb(7);
  const Model ma = build_network(a, ra);
  const Model mb = build_network(b, rb);
  for (std::size_t i = 0; i < ma.layers().size(); ++i) {
    const auto& pa = std::get<Model::DenseLayer>(ma.layers()[i]).params;
    const auto& pb = std::get<Model::DenseLayer>(mb.layers()[i]).params;
    EXPECT_EQ(pa.weights, pb.weights);
    EXPECT_FALSE(pa.gamma.has_value());
    ASSERT_TRUE(pb.gamma.has_value());
  }
}

TEST(BuildNetwork, GammaOnesMakesTheNetworksEquivalent) {
  NetworkSpec a = with_hidden_units(preset("mnist-fnn"), {20, 10});
  a.init.gamma_init = GammaInit::ones;
  Rng ra(3), rb(3), rx(4);
  const Model ma = build_network(a, ra);
  const Model mb = build_network(with_double_weight(a, true), rb);
  const Tensor x = test::random_tensor(rx, {3, 28, 28, 1}, 0, 1);
  EXPECT_EQ(ma.predict(x), mb.predict(x));
}

TEST(Validation, NamesTheOffendingField) {
  auto field_of = [](const NetworkSpec& spec) {
    try {
      validate(spec);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string("<valid>");
  };
  NetworkSpec spec = preset("mnist-fnn");
  EXPECT_EQ(field_of(spec), "<valid>");

  NetworkSpec bad = spec;
  bad.loss = Loss::sse;
  EXPECT_EQ(field_of(bad), "loss");
  bad = spec;
  bad.learning_rate = -1;
  EXPECT_EQ(field_of(bad), "learning_rate");
  bad = spec;
  bad.batch_size = 0;
  EXPECT_EQ(field_of(bad), "batch_size");
  bad = spec;
  std::get<DenseSpec>(bad.layers[1]).units = 0;
  EXPECT_EQ(field_of(bad), "layers[1].units");
  bad = preset("mnist-cnn");
  std::swap(bad.layers[2], bad.layers[3]);
  EXPECT_EQ(field_of(bad), "layers[3].type");
}

TEST(SpecJson, RoundTrip) {
  for (const auto& name : preset_names()) {
    NetworkSpec spec = with_double_weight(preset(name), true);
    spec.seed = 12345;
    spec.init.gamma_init = GammaInit::ones;
    EXPECT_EQ(network_spec_from_json(network_spec_to_json(spec)), spec) << name;
  }
}

TEST(SpecJson, UnknownKeysAreRejected) {
  Json j = network_spec_to_json(preset("mnist-fnn"));
  j["learning_rat"] = 0.1;
  EXPECT_THROW(network_spec_from_json(j), ValidationError);
}

TEST(Model, LossMatchesLossAndGradients) {
  const NetworkSpec spec = with_double_weight(with_hidden_units(preset("mnist-cnn"), {6}), true);
  Rng rng(10);
  Model model = build_network(spec, rng);
  const Tensor x = test::random_tensor(rng, {2, 28, 28, 1}, 0, 1);
  const std::vector<std::uint32_t> labels{3, 7};
  const Tensor y = one_hot(labels, 10);
  std::vector<Tensor> grads;
  EXPECT_EQ(model.loss_and_gradients(x, y, grads), model.loss(x, y));
  EXPECT_EQ(grads.size(), model.parameters().size());
  EXPECT_EQ(model.predict(x).shape(), (Shape{2, 10}));
}
