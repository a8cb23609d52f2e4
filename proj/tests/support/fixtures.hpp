#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dwnet/dwnet.hpp"

namespace dwnet::test {

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

using Bytes = std::vector<std::uint8_t>;

void write_bytes(const std::filesystem::path& path, const Bytes& bytes);
std::string read_text(const std::filesystem::path& path);

Bytes idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols, std::uint8_t fill);
Bytes idx_labels(const std::vector<std::uint8_t>& labels);
Bytes cifar_record(std::uint8_t label, std::uint8_t fill);

struct CorruptIdx {
  std::string mode;
  Bytes images;
  Bytes labels;
};
/// IDX pairs that a loader must reject, one per corruption mode.
std::vector<CorruptIdx> corrupted_idx_corpus();

struct CorruptCifar {
  std::string mode;
  Bytes bytes;
};
std::vector<CorruptCifar> corrupted_cifar_corpus();

/// Writes a small MNIST-shaped directory (28x28 images, 10 classes) with the
/// four standard file names.
void write_mnist_fixture(const std::filesystem::path& dir, std::uint32_t train_count, std::uint32_t test_count);

/// Dense-only spec on 1x1xinputs items.
NetworkSpec dense_spec(std::size_t inputs, std::vector<DenseSpec> layers, Loss loss);

}  // namespace dwnet::test
