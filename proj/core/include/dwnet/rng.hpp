#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "dwnet/tensor.hpp"

namespace dwnet {

/// Seeded pseudo-random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and normal variates are derived here rather than through
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  static constexpr std::string_view algorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n), unbiased.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (one variate per call).
  double normal();

  /// Engine state as text; restoring it resumes the exact sequence.
  std::string state() const;
  void set_state(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Child seed for an independent stream, via a splitmix64 mix of
/// (parent, stream). Used for per-run and per-layer seeds.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// Normal(mean, sigma^2) draws, redrawing any value outside mean +/- 2 sigma.
Tensor draw_truncated_normal(Rng& rng, Shape shape, double mean, double sigma);

}  // namespace dwnet
