#include "support/fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace dwnet::test {

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Tensor out(std::move(shape));
  for (double& v : out.data()) v = lo + (hi - lo) * rng.uniform();
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("dwnet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_bytes(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void put_be32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

Bytes idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols, std::uint8_t fill) {
  Bytes out;
  put_be32(out, 2051);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), static_cast<std::size_t>(count) * rows * cols, fill);
  return out;
}

Bytes idx_labels(const std::vector<std::uint8_t>& labels) {
  Bytes out;
  put_be32(out, 2049);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

Bytes cifar_record(std::uint8_t label, std::uint8_t fill) {
  Bytes out(3073, fill);
  out[0] = label;
  return out;
}

std::vector<CorruptIdx> corrupted_idx_corpus() {
  const Bytes good_images = idx_images(3, 4, 4, 7);
  const Bytes good_labels = idx_labels({1, 2, 3});
  std::vector<CorruptIdx> corpus;

  Bytes bad = good_images;
  bad[3] = 0x04;  // 2052
  corpus.push_back({"image magic 2052", bad, good_labels});

  bad = good_labels;
  bad[3] = 0x03;  // 2051 in the label file
  corpus.push_back({"label magic swapped", good_images, bad});

  corpus.push_back({"image header truncated", Bytes(good_images.begin(), good_images.begin() + 10), good_labels});
  corpus.push_back({"image pixels truncated", Bytes(good_images.begin(), good_images.end() - 5), good_labels});
  corpus.push_back({"label bytes truncated", good_images, Bytes(good_labels.begin(), good_labels.end() - 1)});
  corpus.push_back({"count mismatch", good_images, idx_labels({1, 2})});
  corpus.push_back({"label overflow", good_images, idx_labels({1, 10, 3})});

  bad = idx_images(3, 4, 4, 7);
  bad[11] = 0;  // zero rows
  bad.resize(16);
  corpus.push_back({"zero rows", bad, good_labels});

  corpus.push_back({"empty image file", Bytes{}, good_labels});
  corpus.push_back({"trailing garbage", [&] {
                      Bytes b = good_images;
                      b.push_back(1);
                      return b;
                    }(),
                    good_labels});
  return corpus;
}

std::vector<CorruptCifar> corrupted_cifar_corpus() {
  std::vector<CorruptCifar> corpus;
  Bytes rec = cifar_record(3, 9);
  Bytes b = rec;
  b.push_back(0);
  corpus.push_back({"length 3074", b});
  corpus.push_back({"length 3072", Bytes(rec.begin(), rec.end() - 1)});
  corpus.push_back({"empty file", Bytes{}});
  corpus.push_back({"label 10", cifar_record(10, 0)});
  b = rec;
  const Bytes bad = cifar_record(255, 0);
  b.insert(b.end(), bad.begin(), bad.end());
  corpus.push_back({"second record label 255", b});
  return corpus;
}

void write_mnist_fixture(const std::filesystem::path& dir, std::uint32_t train_count, std::uint32_t test_count) {
  std::filesystem::create_directories(dir);
  auto labels = [](std::uint32_t n) {
    std::vector<std::uint8_t> out(n);
    for (std::uint32_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(i % 10);
    return out;
  };
  write_bytes(dir / "train-images-idx3-ubyte", idx_images(train_count, 28, 28, 128));
  write_bytes(dir / "train-labels-idx1-ubyte", idx_labels(labels(train_count)));
  write_bytes(dir / "t10k-images-idx3-ubyte", idx_images(test_count, 28, 28, 64));
  write_bytes(dir / "t10k-labels-idx1-ubyte", idx_labels(labels(test_count)));
}

NetworkSpec dense_spec(std::size_t inputs, std::vector<DenseSpec> layers, Loss loss) {
  NetworkSpec spec;
  spec.name = "test";
  spec.input_shape = {1, 1, inputs};
  for (const auto& l : layers) spec.layers.emplace_back(l);
  spec.loss = loss;
  spec.batch_size = 4;
  spec.iterations = 10;
  return spec;
}

}  // namespace dwnet::test
