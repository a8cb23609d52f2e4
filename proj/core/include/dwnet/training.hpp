#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dwnet/data.hpp"
#include "dwnet/network.hpp"
#include "dwnet/optim.hpp"

namespace dwnet {

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based, counts completed optimizer steps
  double train_loss = 0.0;
  std::optional<double> test_accuracy;
};

using Observer = std::function<void(const IterationRecord&)>;

struct EvalOptions {
  const Dataset* test_set = nullptr;  // no evaluation when null
  std::size_t test_subset_size = 1000;
  std::size_t eval_cadence = 1;  // evaluate every k-th iteration
};

/// Fraction of items in dataset[begin, begin + count) whose argmax
/// prediction equals the label.
double evaluate_accuracy(const Model& model, const Dataset& dataset, std::size_t begin, std::size_t count);
double evaluate_accuracy(const Model& model, const Dataset& dataset);

/// Owns one training run: model, optimizer state and data order.
///
/// Seeding: the run seed (spec.seed) yields two independent streams,
/// derive_seed(seed, 0) for parameter initialization and derive_seed(seed, 1)
/// for minibatch shuffling.
class Trainer {
 public:
  Trainer(NetworkSpec spec, const Dataset& train_set);
  /// Resumes from previously captured state (see checkpoint.hpp).
  Trainer(Model model, const Dataset& train_set, AdamState adam, std::size_t iteration, BatchIterator iterator);

  /// One optimizer step on the next minibatch. Throws NumericError on a
  /// non-finite loss.
  IterationRecord step();
  /// Steps until `spec().iterations` have been completed.
  std::vector<IterationRecord> run(const EvalOptions& eval = {}, const Observer& observer = {});
  /// Exactly `count` more steps.
  std::vector<IterationRecord> run_steps(std::size_t count, const EvalOptions& eval = {},
                                         const Observer& observer = {});

  const NetworkSpec& spec() const noexcept { return model_.spec(); }
  const Model& model() const noexcept { return model_; }
  Model& model() noexcept { return model_; }
  const AdamState& adam_state() const noexcept { return adam_; }
  const BatchIterator& iterator() const noexcept { return iterator_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  Model model_;
  const Dataset* train_set_;
  AdamState adam_;
  std::size_t iteration_ = 0;
  BatchIterator iterator_;
  std::vector<Tensor> grads_;
};

struct TrainResult {
  Model model;
  std::vector<IterationRecord> log;
};

/// Builds the network from spec and trains it for spec.iterations steps.
TrainResult train(const NetworkSpec& spec, const Dataset& train_set, const EvalOptions& eval = {},
                  const Observer& observer = {});

struct TensorCheck {
  std::string name;
  std::size_t elements = 0;
  double max_relative_error = 0.0;
  // Values at the worst element.
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradientCheckReport {
  std::vector<TensorCheck> tensors;
  double max_relative_error() const;
  bool passed(double tolerance) const { return max_relative_error() < tolerance; }
};

/// Largest gradient_check accepts.
inline constexpr std::size_t kGradientCheckMaxParameters = 20000;

/// Hook applied to the analytic gradients before comparison; test-only.
using GradientTamper = std::function<void(std::vector<Tensor>&)>;

/// Central differences (E(t + eps) - E(t - eps)) / 2 eps against the
/// analytic gradient, element by element. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8). Refuses models above
/// kGradientCheckMaxParameters with an ArgumentError.
GradientCheckReport gradient_check(Model& model, const Tensor& x, const Tensor& targets, double epsilon = 1e-5,
                                   const GradientTamper& tamper = {});

struct GradientCheckBatch {
  Tensor x;
  Tensor targets;
};

/// Sets up a model and a random batch whose central differences resolve every
/// gradient element at the 1e-8 floor of gradient_check.
///
/// With `redraw`, every weight, gamma and kernel is redrawn with magnitude in
/// [0.5, 1.5] * sigma and random sign. sigma is gain / sqrt(fan_in) per
/// effective weight (gain 4 behind a sigmoid layer, sqrt 2 behind relu, 1
/// for the output layer and the first layer); double-weight layers split it as sqrt(sigma) per factor. This keeps
/// gradients away from the ~1e-7 scale where roundoff dominates.
///
/// Biases get a +/-0.1 jitter and inputs are drawn from [0.25, 1]. Batches
/// that leave a relu pre-activation within 1e-3 of its kink are redrawn.
GradientCheckBatch prepare_gradient_check(Model& model, std::size_t batch, Rng& rng, bool redraw = true);

}  // namespace dwnet
