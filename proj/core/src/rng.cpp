#include "dwnet/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dwnet/errors.hpp"

namespace dwnet {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ArgumentError("uniform_index needs n > 0");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % n;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const {
  std::ostringstream out;
  out << seed_ << ' ' << engine_;
  return out.str();
}

void Rng::set_state(const std::string& text) {
  std::istringstream in(text);
  std::uint64_t seed = 0;
  std::mt19937_64 engine;
  in >> seed >> engine;
  if (in.fail()) throw FormatError("unreadable rng state");
  seed_ = seed;
  engine_ = engine;
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  std::uint64_t z = parent ^ (stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor draw_truncated_normal(Rng& rng, Shape shape, double mean, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("truncated normal needs sigma > 0, got " + std::to_string(sigma));
  }
  Tensor out(std::move(shape));
  const double bound = 2.0 * sigma;
  for (auto& v : out.data()) {
    double draw;
    do {
      draw = sigma * rng.normal();
    } while (!(std::abs(draw) < bound));
    v = mean + draw;
  }
  return out;
}

}  // namespace dwnet
