#include "dwnet/optim.hpp"

#include <cmath>

#include "dwnet/errors.hpp"

namespace dwnet {

namespace {

void check_pairs(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("optimizer got " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw DimensionError("gradient " + std::to_string(i) + " has shape " + to_string(grads[i].shape()) +
                           ", parameter has " + to_string(params[i]->shape()));
    }
  }
}

}  // namespace

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state, double lr,
               const AdamConfig& config) {
  check_pairs(params, grads);
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) throw StateError("Adam state was built for a different parameter set");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double m_correction = 1.0 - std::pow(config.beta1, t);
  const double v_correction = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / m_correction;
      const double v_hat = v[k] / v_correction;
      theta[k] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr) {
  check_pairs(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->data();
    auto g = grads[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= lr * g[k];
  }
}

}  // namespace dwnet
