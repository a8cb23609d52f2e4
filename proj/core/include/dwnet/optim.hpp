#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dwnet/network.hpp"
#include "dwnet/tensor.hpp"

namespace dwnet {

/// First/second moment per parameter tensor plus the step counter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update applied to each tensor independently.
/// State is lazily sized on the first call.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state, double lr,
               const AdamConfig& config = {});

/// theta -= lr * g
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr);

}  // namespace dwnet
