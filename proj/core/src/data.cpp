#include "dwnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "dwnet/errors.hpp"

namespace dwnet {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPlane = kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + 3 * kCifarPlane;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string at_offset(const std::filesystem::path& path, std::size_t offset) {
  return path.filename().string() + " at byte offset " + std::to_string(offset);
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError("truncated IDX header in " + at_offset(path, offset));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& bytes, std::uint32_t v) {
  bytes.push_back(static_cast<std::uint8_t>(v >> 24));
  bytes.push_back(static_cast<std::uint8_t>(v >> 16));
  bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  bytes.push_back(static_cast<std::uint8_t>(v));
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > size()) {
    throw ArgumentError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                        ") outside dataset of " + std::to_string(size()));
  }
  const std::size_t stride = item_size();
  Shape shape = images.shape();
  shape[0] = count;
  auto first = images.values().begin() + static_cast<std::ptrdiff_t>(begin * stride);
  Dataset out;
  out.images = Tensor(std::move(shape), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * stride)));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.num_classes = num_classes;
  out.split = split;
  return out;
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  const std::size_t stride = item_size();
  Shape shape = images.shape();
  shape[0] = indices.size();
  Tensor out(std::move(shape));
  auto src = images.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[k] * stride), stride,
                dst.begin() + static_cast<std::ptrdiff_t>(k * stride));
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path, Split split,
                 std::size_t num_classes) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);

  const std::uint32_t image_magic = read_be32(image_bytes, 0, images_path);
  if (image_magic != kIdxImageMagic) {
    throw FormatError("bad IDX image magic " + std::to_string(image_magic) + " (expected 2051) in " +
                      at_offset(images_path, 0));
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, labels_path);
  if (label_magic != kIdxLabelMagic) {
    throw FormatError("bad IDX label magic " + std::to_string(label_magic) + " (expected 2049) in " +
                      at_offset(labels_path, 0));
  }

  const std::size_t count = read_be32(image_bytes, 4, images_path);
  const std::size_t rows = read_be32(image_bytes, 8, images_path);
  const std::size_t cols = read_be32(image_bytes, 12, images_path);
  const std::size_t label_count = read_be32(label_bytes, 4, labels_path);
  if (count == 0 || rows == 0 || cols == 0) {
    throw FormatError("IDX image header declares an empty extent in " + at_offset(images_path, 4));
  }
  if (count != label_count) {
    throw FormatError("IDX count mismatch: " + std::to_string(count) + " images vs " + std::to_string(label_count) +
                      " labels (" + at_offset(labels_path, 4) + ")");
  }
  constexpr std::size_t image_header = 16, label_header = 8;
  const std::size_t pixels = count * rows * cols;
  if (image_bytes.size() != image_header + pixels) {
    const bool short_file = image_bytes.size() < image_header + pixels;
    throw FormatError(std::string(short_file ? "truncated" : "trailing bytes in") + " IDX image data: " +
                      at_offset(images_path, std::min(image_bytes.size(), image_header + pixels)));
  }
  if (label_bytes.size() != label_header + count) {
    const bool short_file = label_bytes.size() < label_header + count;
    throw FormatError(std::string(short_file ? "truncated" : "trailing bytes in") + " IDX label data: " +
                      at_offset(labels_path, std::min(label_bytes.size(), label_header + count)));
  }

  Dataset out;
  out.num_classes = num_classes;
  out.split = split;
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t label = label_bytes[label_header + i];
    if (label >= num_classes) {
      throw FormatError("label " + std::to_string(label) + " >= " + std::to_string(num_classes) + " in " +
                        at_offset(labels_path, label_header + i));
    }
    out.labels[i] = label;
  }
  out.images = Tensor({count, rows, cols, 1});
  auto dst = out.images.data();
  for (std::size_t i = 0; i < pixels; ++i) dst[i] = image_bytes[image_header + i] / 255.0;
  return out;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const Dataset& dataset) {
  if (dataset.images.rank() != 4 || dataset.images.dim(3) != 1) {
    throw DimensionError("IDX images must be single-channel, got " + to_string(dataset.images.shape()));
  }
  std::vector<std::uint8_t> images;
  put_be32(images, kIdxImageMagic);
  put_be32(images, static_cast<std::uint32_t>(dataset.size()));
  put_be32(images, static_cast<std::uint32_t>(dataset.images.dim(1)));
  put_be32(images, static_cast<std::uint32_t>(dataset.images.dim(2)));
  for (double v : dataset.images.data()) images.push_back(to_byte(v));

  std::vector<std::uint8_t> labels;
  put_be32(labels, kIdxLabelMagic);
  put_be32(labels, static_cast<std::uint32_t>(dataset.size()));
  for (auto label : dataset.labels) labels.push_back(static_cast<std::uint8_t>(label));

  write_file(images_path, images);
  write_file(labels_path, labels);
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_paths, Split split) {
  if (batch_paths.empty()) throw ArgumentError("load_cifar10 needs at least one batch file");
  std::vector<std::vector<std::uint8_t>> files;
  std::size_t records = 0;
  for (const auto& path : batch_paths) {
    auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
      throw FormatError("CIFAR-10 file length " + std::to_string(bytes.size()) + " is not a positive multiple of " +
                        std::to_string(kCifarRecord) + " (" +
                        at_offset(path, bytes.size() - bytes.size() % kCifarRecord) + ")");
    }
    records += bytes.size() / kCifarRecord;
    files.push_back(std::move(bytes));
  }

  Dataset out;
  out.num_classes = 10;
  out.split = split;
  out.images = Tensor({records, kCifarSide, kCifarSide, 3});
  out.labels.reserve(records);
  auto dst = out.images.data();
  std::size_t item = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& bytes = files[f];
    for (std::size_t r = 0; r * kCifarRecord < bytes.size(); ++r, ++item) {
      const std::size_t base = r * kCifarRecord;
      if (bytes[base] >= 10) {
        throw FormatError("CIFAR-10 label " + std::to_string(bytes[base]) + " >= 10 in " +
                          at_offset(batch_paths[f], base));
      }
      out.labels.push_back(bytes[base]);
      double* img = dst.data() + item * kCifarPlane * 3;
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < kCifarPlane; ++p) img[p * 3 + c] = bytes[base + 1 + c * kCifarPlane + p] / 255.0;
    }
  }
  return out;
}

void write_cifar10(const std::filesystem::path& path, const Dataset& dataset) {
  if (dataset.item_shape() != Shape{kCifarSide, kCifarSide, 3}) {
    throw DimensionError("CIFAR-10 items must be 32x32x3, got " + to_string(dataset.item_shape()));
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(dataset.size() * kCifarRecord);
  auto src = dataset.images.data();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    bytes.push_back(static_cast<std::uint8_t>(dataset.labels[i]));
    const double* img = src.data() + i * kCifarPlane * 3;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < kCifarPlane; ++p) bytes.push_back(to_byte(img[p * 3 + c]));
  }
  write_file(path, bytes);
}

Dataset make_toy_dataset(Rng& rng, std::size_t n, ToyKind kind) {
  if (n < 4) throw ArgumentError("toy datasets need n >= 4");
  Dataset out;
  out.num_classes = 2;
  out.images = Tensor({n, 1, 1, 2});
  out.labels.resize(n);
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    if (kind == ToyKind::two_gaussians) {
      const std::uint32_t label = static_cast<std::uint32_t>(i % 2);
      const double center = label == 0 ? 0.3 : 0.7;
      constexpr double margin = 0.1;
      do {
        x = clamp01(center + 0.08 * rng.normal());
        y = clamp01(center + 0.08 * rng.normal());
      } while (label == 0 ? x + y > 1.0 - margin : x + y < 1.0 + margin);
      out.labels[i] = label;
    } else {
      const std::size_t cluster = i % 4;
      const double cx = (cluster == 0 || cluster == 2) ? 0.2 : 0.8;
      const double cy = (cluster == 0 || cluster == 3) ? 0.2 : 0.8;
      x = clamp01(cx + 0.05 * rng.normal());
      y = clamp01(cy + 0.05 * rng.normal());
      out.labels[i] = (cx < 0.5) == (cy < 0.5) ? 0u : 1u;
    }
    out.images[2 * i] = x;
    out.images[2 * i + 1] = y;
  }
  return out;
}

Tensor one_hot(std::span<const std::uint32_t> labels, std::size_t num_classes) {
  if (labels.empty()) throw ArgumentError("one_hot of an empty label list");
  Tensor out({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ArgumentError("label " + std::to_string(labels[i]) + " outside " + std::to_string(num_classes) + " classes");
    }
    out.at(i, labels[i]) = 1.0;
  }
  return out;
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size, Rng rng)
    : dataset_(&dataset), batch_size_(batch_size), rng_(std::move(rng)) {
  if (batch_size_ == 0 || batch_size_ > dataset.size()) {
    throw ArgumentError("batch size " + std::to_string(batch_size_) + " must lie in [1, " +
                        std::to_string(dataset.size()) + "]");
  }
  permutation_.resize(dataset.size());
  reshuffle();
}

void BatchIterator::reshuffle() {
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  for (std::size_t i = permutation_.size(); i > 1; --i) {
    std::swap(permutation_[i - 1], permutation_[rng_.uniform_index(i)]);
  }
  cursor_ = 0;
}

Batch BatchIterator::next() {
  if (cursor_ + batch_size_ > permutation_.size()) {
    reshuffle();
    ++epoch_;
  }
  Batch batch;
  batch.indices.assign(permutation_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                       permutation_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
  cursor_ += batch_size_;
  batch.images = dataset_->gather(batch.indices);
  std::vector<std::uint32_t> labels;
  labels.reserve(batch_size_);
  for (auto idx : batch.indices) labels.push_back(dataset_->labels[idx]);
  batch.targets = one_hot(labels, dataset_->num_classes);
  return batch;
}

void BatchIterator::restore(std::vector<std::size_t> permutation, std::size_t cursor, std::uint64_t epoch, Rng rng) {
  if (permutation.size() != dataset_->size() || cursor > permutation.size()) {
    throw StateError("iterator state does not match the dataset");
  }
  permutation_ = std::move(permutation);
  cursor_ = cursor;
  epoch_ = epoch;
  rng_ = std::move(rng);
}

}  // namespace dwnet
