#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dwnet/dwnet.hpp"
#include "support/fixtures.hpp"

using namespace dwnet;
using namespace dwnet::test;

namespace {

// Best accuracy of any line w . p = c over a sweep of directions, with c at
// every projected sample.
double best_linear_accuracy(const Dataset& d) {
  double best = 0.0;
  const std::size_t n = d.size();
  for (int k = 0; k < 720; ++k) {
    const double angle = M_PI * k / 360.0;
    const double ux = std::cos(angle), uy = std::sin(angle);
    std::vector<std::pair<double, std::uint32_t>> proj(n);
    for (std::size_t i = 0; i < n; ++i) proj[i] = {ux * d.images[2 * i] + uy * d.images[2 * i + 1], d.labels[i]};
    std::sort(proj.begin(), proj.end());
    // Threshold after position j: items <= j predicted 0, rest predicted 1.
    std::size_t ones_right = 0;
    for (const auto& p : proj) ones_right += p.second;
    std::size_t zeros_left = 0;
    for (std::size_t j = 0; j <= n; ++j) {
      best = std::max(best, static_cast<double>(zeros_left + ones_right) / n);
      if (j == n) break;
      if (proj[j].second == 0) {
        ++zeros_left;
      } else {
        --ones_right;
      }
    }
  }
  return best;
}

}  // namespace

TEST(Idx, RoundTripOfZeroImages) {
  TempDir dir("idx");
  write_bytes(dir / "img", idx_images(2, 28, 28, 0));
  write_bytes(dir / "lbl", idx_labels({7, 3}));
  const Dataset d = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(d.images, Tensor({2, 28, 28, 1}));
  EXPECT_EQ(d.labels, (std::vector<std::uint32_t>{7, 3}));
  EXPECT_EQ(d.num_classes, 10u);
}

TEST(Idx, PixelsScaleByOneOver255) {
  TempDir dir("idx");
  write_bytes(dir / "img", idx_images(1, 2, 3, 51));
  write_bytes(dir / "lbl", idx_labels({0}));
  const Dataset d = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(d.item_shape(), (Shape{2, 3, 1}));
  for (double v : d.images.values()) EXPECT_EQ(v, 51.0 / 255.0);
}

TEST(Idx, WriterAndReaderAgree) {
  TempDir dir("idx");
  Rng rng(3);
  Dataset d;
  d.num_classes = 10;
  d.images = Tensor({5, 4, 4, 1});
  for (double& v : d.images.data()) v = static_cast<double>(rng.uniform_index(256)) / 255.0;
  d.labels = {0, 9, 4, 4, 1};
  write_idx(dir / "img", dir / "lbl", d);
  const Dataset back = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(back.images, d.images);
  EXPECT_EQ(back.labels, d.labels);
}

TEST(Idx, RejectsEveryCorruptedFixture) {
  TempDir dir("idx-bad");
  const auto corpus = corrupted_idx_corpus();
  EXPECT_GE(corpus.size(), 6u);
  for (const auto& c : corpus) {
    write_bytes(dir / "img", c.images);
    write_bytes(dir / "lbl", c.labels);
    EXPECT_THROW(load_idx(dir / "img", dir / "lbl"), FormatError) << c.mode;
  }
  EXPECT_THROW(load_idx(dir / "missing", dir / "lbl"), FormatError);
}

TEST(Idx, Magic2052IsAFormatErrorWithOffset) {
  TempDir dir("idx");
  Bytes img = idx_images(1, 2, 2, 0);
  img[3] = 0x04;
  write_bytes(dir / "img", img);
  write_bytes(dir / "lbl", idx_labels({0}));
  try {
    load_idx(dir / "img", dir / "lbl");
    FAIL();
  } catch (const FormatError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2052"), std::string::npos) << what;
    EXPECT_NE(what.find("offset"), std::string::npos) << what;
  }
}

TEST(Cifar, SingleRecordFixture) {
  TempDir dir("cifar");
  write_bytes(dir / "b.bin", cifar_record(3, 255));
  const Dataset d = load_cifar10({dir / "b.bin"});
  EXPECT_EQ(d.images, Tensor::ones({1, 32, 32, 3}));
  EXPECT_EQ(d.labels, (std::vector<std::uint32_t>{3}));
}

TEST(Cifar, ChannelPlanarOrder) {
  TempDir dir("cifar");
  Bytes rec = cifar_record(1, 0);
  // pixel (row 0, col 1): R at 1 + 1, G at 1 + 1024 + 1, B at 1 + 2048 + 1
  rec[2] = 10;
  rec[1026] = 20;
  rec[2050] = 30;
  write_bytes(dir / "b.bin", rec);
  const Dataset d = load_cifar10({dir / "b.bin"});
  EXPECT_EQ(d.images[3], 10.0 / 255.0);
  EXPECT_EQ(d.images[4], 20.0 / 255.0);
  EXPECT_EQ(d.images[5], 30.0 / 255.0);
}

TEST(Cifar, RecordsAcrossFilesAndWriterRoundTrip) {
  TempDir dir("cifar");
  Bytes two = cifar_record(0, 1);
  const Bytes second = cifar_record(9, 2);
  two.insert(two.end(), second.begin(), second.end());
  write_bytes(dir / "a.bin", two);
  write_bytes(dir / "b.bin", cifar_record(5, 3));
  const Dataset d = load_cifar10({dir / "a.bin", dir / "b.bin"});
  EXPECT_EQ(d.labels, (std::vector<std::uint32_t>{0, 9, 5}));
  write_cifar10(dir / "c.bin", d);
  EXPECT_EQ(std::filesystem::file_size(dir / "c.bin"), 3u * 3073u);
  EXPECT_EQ(load_cifar10({dir / "c.bin"}).images, d.images);
}

TEST(Cifar, RejectsEveryCorruptedFixture) {
  TempDir dir("cifar-bad");
  for (const auto& c : corrupted_cifar_corpus()) {
    write_bytes(dir / "b.bin", c.bytes);
    EXPECT_THROW(load_cifar10({dir / "b.bin"}), FormatError) << c.mode;
  }
}

TEST(Toy, TwoGaussiansIsLinearlySeparable) {
  Rng rng(1);
  const Dataset d = make_toy_dataset(rng, 100, ToyKind::two_gaussians);
  EXPECT_EQ(best_linear_accuracy(d), 1.0);
  for (double v : d.images.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Toy, XorDefeatsLinearClassifiers) {
  Rng rng(2);
  const Dataset d = make_toy_dataset(rng, 100, ToyKind::xor_clusters);
  EXPECT_LE(best_linear_accuracy(d), 0.75);
}

TEST(Toy, Deterministic) {
  Rng a(5), b(5);
  const Dataset x = make_toy_dataset(a, 40, ToyKind::xor_clusters);
  const Dataset y = make_toy_dataset(b, 40, ToyKind::xor_clusters);
  EXPECT_EQ(x.images, y.images);
  EXPECT_EQ(x.labels, y.labels);
  Rng c(1);
  EXPECT_THROW(make_toy_dataset(c, 3, ToyKind::two_gaussians), ArgumentError);
}

TEST(OneHot, Rows) {
  const std::vector<std::uint32_t> labels{3, 0};
  const Tensor t = one_hot(labels, 10);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(t.at(0, j), j == 3 ? 1.0 : 0.0);
  EXPECT_EQ(t.at(1, 0), 1.0);
}

TEST(BatchIterator, WholeDatasetBatch) {
  Rng rng(1);
  const Dataset d = make_toy_dataset(rng, 10, ToyKind::two_gaussians);
  BatchIterator it(d, 10, Rng(2));
  const Batch b = it.next();
  std::vector<std::size_t> idx = b.indices;
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(b.images.shape(), (Shape{10, 1, 1, 2}));
  EXPECT_EQ(b.targets.shape(), (Shape{10, 2}));
}

TEST(BatchIterator, EpochsPartitionTheIndices) {
  Rng rng(1);
  const Dataset d = make_toy_dataset(rng, 10, ToyKind::two_gaussians);
  BatchIterator it(d, 5, Rng(3));
  std::map<std::size_t, int> seen;
  for (int i = 0; i < 4; ++i) {
    for (std::size_t k : it.next().indices) ++seen[k];
  }
  EXPECT_EQ(seen.size(), 10u);
  for (const auto& [k, count] : seen) EXPECT_EQ(count, 2) << k;
}

TEST(BatchIterator, ShortTailIsDropped) {
  Rng rng(1);
  const Dataset d = make_toy_dataset(rng, 11, ToyKind::two_gaussians);
  BatchIterator it(d, 4, Rng(4));
  std::map<std::size_t, int> first_epoch;
  for (int i = 0; i < 2; ++i) {
    for (std::size_t k : it.next().indices) ++first_epoch[k];
  }
  EXPECT_EQ(first_epoch.size(), 8u);
  for (const auto& [k, count] : first_epoch) EXPECT_EQ(count, 1);
  EXPECT_EQ(it.epoch(), 0u);
  it.next();
  EXPECT_EQ(it.epoch(), 1u);
  EXPECT_THROW(BatchIterator(d, 12, Rng(1)), ArgumentError);
}

TEST(BatchIterator, TargetsMatchLabels) {
  Rng rng(6);
  const Dataset d = make_toy_dataset(rng, 20, ToyKind::xor_clusters);
  BatchIterator it(d, 6, Rng(7));
  const Batch b = it.next();
  for (std::size_t r = 0; r < 6; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 2; ++c) sum += b.targets.at(r, c);
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(b.targets.at(r, d.labels[b.indices[r]]), 1.0);
    EXPECT_EQ(b.images[2 * r], d.images[2 * b.indices[r]]);
  }
}
