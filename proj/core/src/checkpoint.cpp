#include "dwnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <variant>

#include "dwnet/errors.hpp"
#include "dwnet/spec_json.hpp"

namespace dwnet {

namespace {

constexpr char kMagic[8] = {'D', 'W', 'N', 'E', 'T', 'C', 'K', 'P'};

enum class Kind : std::uint8_t { tensor = 1, u64 = 2, string = 3, u64_array = 4 };

using Entry = std::variant<Tensor, std::uint64_t, std::string, std::vector<std::uint64_t>>;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  void entry(const std::string& name, const Entry& value) {
    u8(static_cast<std::uint8_t>(value.index() + 1));
    u32(static_cast<std::uint32_t>(name.size()));
    raw(name);
    if (const auto* t = std::get_if<Tensor>(&value)) {
      u32(static_cast<std::uint32_t>(t->rank()));
      for (auto extent : t->shape()) u64(extent);
      for (double v : t->data()) f64(v);
    } else if (const auto* n = std::get_if<std::uint64_t>(&value)) {
      u64(*n);
    } else if (const auto* s = std::get_if<std::string>(&value)) {
      u64(s->size());
      raw(*s);
    } else {
      const auto& values = std::get<std::vector<std::uint64_t>>(value);
      u64(values.size());
      for (auto v : values) u64(v);
    }
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect(std::uint64_t count, std::size_t width) {
    if (count > remaining() / width) throw FormatError("truncated checkpoint at byte offset " + std::to_string(pos_));
  }
  std::size_t position() const { return pos_; }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw FormatError("truncated checkpoint at byte offset " + std::to_string(pos_));
    }
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint64_t> to_u64(const std::vector<std::size_t>& values) {
  return {values.begin(), values.end()};
}

template <typename T>
const T& require(const std::map<std::string, Entry>& entries, const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) throw FormatError("checkpoint is missing entry '" + name + "'");
  if (const auto* v = std::get_if<T>(&it->second)) return *v;
  throw FormatError("checkpoint entry '" + name + "' has the wrong kind");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer) {
  const Model& model = trainer.model();
  const auto params = model.parameters();
  const AdamState& adam = trainer.adam_state();

  std::vector<std::pair<std::string, Entry>> entries;
  entries.emplace_back("spec", network_spec_to_json(model.spec()).dump());
  for (const auto& p : params) entries.emplace_back("param." + p.name, *p.tensor);
  for (std::size_t i = 0; i < adam.m.size(); ++i) {
    entries.emplace_back("adam.m." + params[i].name, adam.m[i]);
    entries.emplace_back("adam.v." + params[i].name, adam.v[i]);
  }
  entries.emplace_back("adam.t", std::uint64_t{adam.t});
  entries.emplace_back("iteration", std::uint64_t{trainer.iteration()});
  const BatchIterator& it = trainer.iterator();
  entries.emplace_back("iterator.permutation", to_u64(it.permutation()));
  entries.emplace_back("iterator.cursor", std::uint64_t{it.cursor()});
  entries.emplace_back("iterator.epoch", std::uint64_t{it.epoch()});
  entries.emplace_back("iterator.rng", it.rng().state());

  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, value] : entries) w.entry(name, value);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Trainer load_checkpoint(const std::filesystem::path& path, const Dataset& train_set) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader r(std::move(bytes));

  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw FormatError("not a checkpoint (bad magic at byte offset 0)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::map<std::string, Entry> entries;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::size_t at = r.position();
    const auto kind = static_cast<Kind>(r.u8());
    std::string name = r.raw(r.u32());
    switch (kind) {
      case Kind::tensor: {
        const std::uint32_t rank = r.u32();
        r.expect(rank, 8);
        Shape shape(rank);
        std::uint64_t elements = 1;
        for (auto& extent : shape) {
          extent = r.u64();
          if (extent == 0) throw FormatError("zero tensor extent in checkpoint entry '" + name + "'");
          r.expect(elements *= extent, 8);
        }
        std::vector<double> values(elements);
        for (auto& v : values) v = r.f64();
        entries.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
        break;
      }
      case Kind::u64: entries.emplace(std::move(name), r.u64()); break;
      case Kind::string: {
        const auto n = r.u64();
        entries.emplace(std::move(name), r.raw(n));
        break;
      }
      case Kind::u64_array: {
        const std::uint64_t n = r.u64();
        r.expect(n, 8);
        std::vector<std::uint64_t> values(n);
        for (auto& v : values) v = r.u64();
        entries.emplace(std::move(name), std::move(values));
        break;
      }
      default:
        throw FormatError("unknown checkpoint entry kind at byte offset " + std::to_string(at));
    }
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint at offset " + std::to_string(r.position()));

  const NetworkSpec spec = network_spec_from_json(Json::parse(require<std::string>(entries, "spec")));
  validate(spec);
  Rng scratch(0);
  Model model = build_network(spec, scratch);
  auto params = model.parameters();
  for (auto& p : params) {
    const Tensor& saved = require<Tensor>(entries, "param." + p.name);
    if (saved.shape() != p.tensor->shape()) throw FormatError("checkpoint tensor '" + p.name + "' has the wrong shape");
    *p.tensor = saved;
  }

  AdamState adam;
  adam.t = require<std::uint64_t>(entries, "adam.t");
  if (entries.contains("adam.m." + params.front().name)) {
    for (const auto& p : params) {
      adam.m.push_back(require<Tensor>(entries, "adam.m." + p.name));
      adam.v.push_back(require<Tensor>(entries, "adam.v." + p.name));
    }
  }

  const auto& perm64 = require<std::vector<std::uint64_t>>(entries, "iterator.permutation");
  Rng iterator_rng(0);
  iterator_rng.set_state(require<std::string>(entries, "iterator.rng"));
  BatchIterator iterator(train_set, spec.batch_size, iterator_rng);
  iterator.restore(std::vector<std::size_t>(perm64.begin(), perm64.end()),
                   require<std::uint64_t>(entries, "iterator.cursor"), require<std::uint64_t>(entries, "iterator.epoch"),
                   iterator_rng);

  return Trainer(std::move(model), train_set, std::move(adam), require<std::uint64_t>(entries, "iteration"),
                 std::move(iterator));
}

}  // namespace dwnet
