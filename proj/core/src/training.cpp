#include "dwnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dwnet/errors.hpp"

namespace dwnet {

double evaluate_accuracy(const Model& model, const Dataset& dataset, std::size_t begin, std::size_t count) {
  if (count == 0) throw ArgumentError("accuracy over an empty slice");
  if (begin + count > dataset.size()) throw ArgumentError("accuracy slice exceeds dataset");
  constexpr std::size_t chunk = 100;
  std::size_t correct = 0;
  std::vector<std::size_t> indices;
  for (std::size_t start = begin; start < begin + count; start += chunk) {
    const std::size_t n = std::min(chunk, begin + count - start);
    indices.resize(n);
    for (std::size_t k = 0; k < n; ++k) indices[k] = start + k;
    const Tensor out = model.predict(dataset.gather(indices));
    const std::size_t classes = out.dim(1);
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = out.data().subspan(k * classes, classes);
      if (argmax_row(row) == dataset.labels[start + k]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(count);
}

double evaluate_accuracy(const Model& model, const Dataset& dataset) {
  return evaluate_accuracy(model, dataset, 0, dataset.size());
}

namespace {

void check_dataset(const NetworkSpec& spec, const Dataset& data) {
  if (data.size() == 0) throw ArgumentError("training set is empty");
  if (data.item_shape() != spec.input_shape) {
    throw DimensionError("dataset items are " + to_string(data.item_shape()) + " but the network expects " +
                         to_string(spec.input_shape));
  }
  if (data.num_classes != num_classes(spec)) {
    throw DimensionError("dataset has " + std::to_string(data.num_classes) + " classes, output layer has " +
                         std::to_string(num_classes(spec)));
  }
}

Model build_for_run(const NetworkSpec& spec) {
  Rng init_rng(derive_seed(spec.seed, 0));
  return build_network(spec, init_rng);
}

}  // namespace

Trainer::Trainer(NetworkSpec spec, const Dataset& train_set)
    : model_(build_for_run(spec)),
      train_set_(&train_set),
      iterator_(train_set, spec.batch_size, Rng(derive_seed(spec.seed, 1))) {
  check_dataset(model_.spec(), train_set);
}

Trainer::Trainer(Model model, const Dataset& train_set, AdamState adam, std::size_t iteration, BatchIterator iterator)
    : model_(std::move(model)),
      train_set_(&train_set),
      adam_(std::move(adam)),
      iteration_(iteration),
      iterator_(std::move(iterator)) {
  check_dataset(model_.spec(), train_set);
}

IterationRecord Trainer::step() {
  const Batch batch = iterator_.next();
  const double loss = model_.loss_and_gradients(batch.images, batch.targets, grads_);
  const std::size_t next_iteration = iteration_ + 1;
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss at iteration " + std::to_string(next_iteration));
  }
  std::vector<Tensor*> params;
  for (auto& ref : model_.parameters()) params.push_back(ref.tensor);
  const auto& spec = model_.spec();
  if (spec.optimizer.kind == OptimizerKind::adam) {
    adam_step(params, grads_, adam_, spec.learning_rate, spec.optimizer.adam);
  } else {
    sgd_step(params, grads_, spec.learning_rate);
  }
  iteration_ = next_iteration;
  return {iteration_, loss, std::nullopt};
}

std::vector<IterationRecord> Trainer::run_steps(std::size_t count, const EvalOptions& eval, const Observer& observer) {
  std::size_t subset = 0;
  if (eval.test_set) {
    if (eval.eval_cadence == 0) throw ArgumentError("eval_cadence must be >= 1");
    subset = std::min(eval.test_subset_size, eval.test_set->size());
    if (subset == 0) throw ArgumentError("test subset is empty");
  }
  std::vector<IterationRecord> log;
  log.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    IterationRecord record = step();
    if (eval.test_set && record.iteration % eval.eval_cadence == 0) {
      record.test_accuracy = evaluate_accuracy(model_, *eval.test_set, 0, subset);
    }
    if (observer) observer(record);
    log.push_back(record);
  }
  return log;
}

std::vector<IterationRecord> Trainer::run(const EvalOptions& eval, const Observer& observer) {
  const std::size_t target = model_.spec().iterations;
  return run_steps(target > iteration_ ? target - iteration_ : 0, eval, observer);
}

TrainResult train(const NetworkSpec& spec, const Dataset& train_set, const EvalOptions& eval,
                  const Observer& observer) {
  Trainer trainer(spec, train_set);
  auto log = trainer.run(eval, observer);
  return {std::move(trainer.model()), std::move(log)};
}

namespace {

Tensor draw_away_from_zero(Rng& rng, const Shape& shape, double sigma) {
  Tensor t(shape);
  for (auto& v : t.data()) {
    const double magnitude = sigma * (0.5 + rng.uniform());
    v = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  return t;
}

double gain_after(std::optional<Activation> previous) {
  if (previous == Activation::sigmoid) return 4.0;
  if (previous == Activation::relu) return std::sqrt(2.0);
  return 1.0;
}

void redraw_parameters(Model& model, Rng& rng) {
  std::optional<Activation> previous;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    auto& layer = model.layers()[i];
    // Output layer at gain 1: larger logits saturate the softmax.
    const double gain = i + 1 == model.layers().size() ? 1.0 : gain_after(previous);
    if (auto* dense = std::get_if<Model::DenseLayer>(&layer)) {
      auto& p = dense->params;
      const double sigma = gain / std::sqrt(static_cast<double>(p.inputs()));
      if (p.gamma) {
        p.weights = draw_away_from_zero(rng, p.weights.shape(), std::sqrt(sigma));
        p.gamma = draw_away_from_zero(rng, p.gamma->shape(), std::sqrt(sigma));
      } else {
        p.weights = draw_away_from_zero(rng, p.weights.shape(), sigma);
      }
      previous = dense->activation;
    } else {
      auto& conv = std::get<Model::ConvLayer>(layer);
      auto& p = conv.params;
      const double fan_in = static_cast<double>(p.window_h() * p.window_w() * p.in_channels());
      p.kernels = draw_away_from_zero(rng, p.kernels.shape(), gain / std::sqrt(fan_in));
      previous = conv.activation;
    }
  }
}

bool near_relu_kink(const Model& model, const Tensor& x) {
  constexpr double margin = 1e-3;
  const auto zs = model.preactivations(x);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const auto& layer = model.layers()[i];
    const Activation act = std::visit([](const auto& l) { return l.activation; }, layer);
    if (act != Activation::relu) continue;
    for (double z : zs[i].data())
      if (std::abs(z) < margin) return true;
  }
  return false;
}

}  // namespace

GradientCheckBatch prepare_gradient_check(Model& model, std::size_t batch, Rng& rng, bool redraw) {
  if (batch == 0) throw ArgumentError("gradient check batch must be >= 1");
  if (redraw) redraw_parameters(model, rng);
  std::vector<Tensor> biases;
  for (const auto& p : std::as_const(model).parameters())
    if (p.name.ends_with(".bias")) biases.push_back(*p.tensor);

  const auto& spec = model.spec();
  Shape x_shape{batch};
  x_shape.insert(x_shape.end(), spec.input_shape.begin(), spec.input_shape.end());
  const std::size_t classes = num_classes(spec);

  constexpr int max_attempts = 100;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::size_t b = 0;
    for (auto& p : model.parameters()) {
      if (!p.name.ends_with(".bias")) continue;
      *p.tensor = biases[b++];
      for (auto& v : p.tensor->data()) v += 0.2 * rng.uniform() - 0.1;
    }
    GradientCheckBatch out{Tensor(x_shape), Tensor::zeros({batch, classes})};
    for (auto& v : out.x.data()) v = 0.25 + 0.75 * rng.uniform();
    for (std::size_t row = 0; row < batch; ++row) {
      if (spec.loss == Loss::cross_entropy) {
        out.targets.at(row, rng.uniform_index(classes)) = 1.0;
      } else {
        for (std::size_t c = 0; c < classes; ++c) out.targets.at(row, c) = rng.uniform();
      }
    }
    if (!near_relu_kink(model, out.x)) return out;
  }
  throw NumericError("could not draw a gradient-check batch clear of relu kinks");
}

double GradientCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& t : tensors) worst = std::max(worst, t.max_relative_error);
  return worst;
}

GradientCheckReport gradient_check(Model& model, const Tensor& x, const Tensor& targets, double epsilon,
                                   const GradientTamper& tamper) {
  const std::size_t count = model.parameter_count();
  if (count > kGradientCheckMaxParameters) {
    throw ArgumentError("gradient check refused: model has " + std::to_string(count) + " parameters (limit " +
                        std::to_string(kGradientCheckMaxParameters) + ")");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("gradient check epsilon must be positive");

  std::vector<Tensor> analytic;
  model.loss_and_gradients(x, targets, analytic);
  if (tamper) tamper(analytic);

  GradientCheckReport report;
  auto params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p].tensor;
    TensorCheck check{params[p].name, theta.size(), 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + epsilon;
      const double plus = model.loss(x, targets);
      theta[i] = saved - epsilon;
      const double minus = model.loss(x, targets);
      theta[i] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > check.max_relative_error) {
        check.max_relative_error = rel;
        check.worst_analytic = a;
        check.worst_numeric = numeric;
      }
    }
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace dwnet
