#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dwnet/rng.hpp"
#include "dwnet/tensor.hpp"

namespace dwnet {

enum class Split { train, test };

/// Labelled images. images: [n x H x W x c] with every value in [0, 1];
/// labels[i] < num_classes.
struct Dataset {
  Tensor images;
  std::vector<std::uint32_t> labels;
  std::size_t num_classes = 0;
  Split split = Split::train;

  std::size_t size() const noexcept { return labels.size(); }
  Shape item_shape() const { return {images.dim(1), images.dim(2), images.dim(3)}; }
  std::size_t item_size() const { return images.size() / images.dim(0); }

  /// Copy of items [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;
  /// Gather of the listed items into a [k x H x W x c] tensor.
  Tensor gather(std::span<const std::size_t> indices) const;
};

/// MNIST-style IDX pair: image magic 0x00000803 (2051), label magic
/// 0x00000801 (2049), big-endian headers. Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split = Split::train, std::size_t num_classes = 10);
/// Writes a dataset back out as an IDX pair (pixels rounded to bytes).
/// Channel count must be 1.
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const Dataset& dataset);

/// CIFAR-10 binary batches: 3073-byte records, 1 label byte then 1024 R,
/// 1024 G, 1024 B bytes. Output items are 32 x 32 x 3.
Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_paths, Split split = Split::train);
void write_cifar10(const std::filesystem::path& path, const Dataset& dataset);

enum class ToyKind { two_gaussians, xor_clusters };

/// Two-feature synthetic sets (items are 1 x 1 x 2).
///   two_gaussians: two clusters kept on opposite sides of x + y = 1 with a
///                  margin, so a linear classifier separates them.
///   xor_clusters:  four corner clusters labelled in XOR pattern.
Dataset make_toy_dataset(Rng& rng, std::size_t n, ToyKind kind);

Tensor one_hot(std::span<const std::uint32_t> labels, std::size_t num_classes);

struct Batch {
  Tensor images;   // [batch x H x W x c]
  Tensor targets;  // [batch x num_classes] one-hot
  std::vector<std::size_t> indices;
};

/// Fixed-size minibatches over a shuffled permutation. A new permutation is
/// drawn whenever fewer than batch_size unseen items remain; the short tail
/// is dropped.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, std::size_t batch_size, Rng rng);

  Batch next();

  std::size_t batch_size() const noexcept { return batch_size_; }
  std::uint64_t epoch() const noexcept { return epoch_; }
  std::size_t cursor() const noexcept { return cursor_; }
  const std::vector<std::size_t>& permutation() const noexcept { return permutation_; }
  const Rng& rng() const noexcept { return rng_; }

  /// Restores a position captured from another iterator over the same data.
  void restore(std::vector<std::size_t> permutation, std::size_t cursor, std::uint64_t epoch, Rng rng);

 private:
  void reshuffle();

  const Dataset* dataset_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> permutation_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace dwnet
