#include "cli/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "dwnet/errors.hpp"
#include "dwnet/rng.hpp"

namespace dwnet::cli {

namespace fs = std::filesystem;

namespace {

const char* const kMnistFiles[] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                                   "t10k-labels-idx1-ubyte"};
const char* const kCifarFiles[] = {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
                                   "data_batch_4.bin", "data_batch_5.bin", "test_batch.bin"};

// Streams of the master seed reserved for toy data generation.
constexpr std::uint64_t kToyTrainStream = 0x70F0;
constexpr std::uint64_t kToyTestStream = 0x70F1;

void reject_unknown(const Json& json, const std::set<std::string>& allowed, const std::string& where) {
  if (!json.is_object()) throw ValidationError(where, "expected an object");
  for (const auto& item : json.items()) {
    if (!allowed.contains(item.key())) throw ValidationError(where + "." + item.key(), "unknown key");
  }
}

std::size_t get_count(const Json& json, const std::string& field) {
  if (!json.is_number_integer() || json.get<long long>() < 0) {
    throw ValidationError(field, "expected a non-negative integer");
  }
  return json.get<std::size_t>();
}

bool get_bool(const Json& json, const std::string& field) {
  if (!json.is_boolean()) throw ValidationError(field, "expected true or false");
  return json.get<bool>();
}

std::string get_string(const Json& json, const std::string& field) {
  if (!json.is_string()) throw ValidationError(field, "expected a string");
  return json.get<std::string>();
}

DatasetKind parse_kind(const std::string& name) {
  if (name == "mnist") return DatasetKind::mnist;
  if (name == "cifar10") return DatasetKind::cifar10;
  if (name == "toy_two_gaussians") return DatasetKind::toy_two_gaussians;
  if (name == "toy_xor") return DatasetKind::toy_xor;
  throw ValidationError("dataset.kind", "unknown dataset kind '" + name +
                                            "' (expected mnist, cifar10, toy_two_gaussians or toy_xor)");
}

bool is_toy(DatasetKind kind) { return kind == DatasetKind::toy_two_gaussians || kind == DatasetKind::toy_xor; }

DatasetKind kind_for_preset(const std::string& name) {
  return name.starts_with("cifar10") ? DatasetKind::cifar10 : DatasetKind::mnist;
}

NetworkSpec preset_or_error(const std::string& name) {
  try {
    return dwnet::preset(name);
  } catch (const ArgumentError& e) {
    throw ValidationError("preset", e.what());
  }
}

void parse_dataset(const Json& json, const fs::path& base_dir, DatasetConfig& out) {
  reject_unknown(json, {"kind", "dir", "train_limit", "toy_train_size", "toy_test_size"}, "dataset");
  if (json.contains("kind")) out.kind = parse_kind(get_string(json["kind"], "dataset.kind"));
  if (json.contains("dir") && !json["dir"].is_null()) {
    fs::path dir = get_string(json["dir"], "dataset.dir");
    out.dir = dir.is_absolute() ? dir : base_dir / dir;
  }
  if (json.contains("train_limit")) out.train_limit = get_count(json["train_limit"], "dataset.train_limit");
  if (json.contains("toy_train_size")) out.toy_train_size = get_count(json["toy_train_size"], "dataset.toy_train_size");
  if (json.contains("toy_test_size")) out.toy_test_size = get_count(json["toy_test_size"], "dataset.toy_test_size");
}

void parse_experiment(const Json& json, ExperimentConfig& out) {
  reject_unknown(json, {"n_seeds", "burn_in", "master_seed", "test_subset_size", "eval_cadence", "paired"},
                 "experiment");
  if (json.contains("n_seeds")) out.n_seeds = get_count(json["n_seeds"], "experiment.n_seeds");
  if (json.contains("burn_in")) out.burn_in = get_count(json["burn_in"], "experiment.burn_in");
  if (json.contains("master_seed")) {
    if (!json["master_seed"].is_number_unsigned()) {
      throw ValidationError("experiment.master_seed", "expected a non-negative integer");
    }
    out.master_seed = json["master_seed"].get<std::uint64_t>();
  }
  if (json.contains("test_subset_size")) {
    out.test_subset_size = get_count(json["test_subset_size"], "experiment.test_subset_size");
  }
  if (json.contains("eval_cadence")) out.eval_cadence = get_count(json["eval_cadence"], "experiment.eval_cadence");
  if (json.contains("paired")) out.paired = get_bool(json["paired"], "experiment.paired");
}

NetworkSpec parse_network(const Json& json, NetworkSpec base) {
  if (!json.is_object()) throw ValidationError("network", "expected an object");
  Json rest = json;
  rest.erase("hidden_units");
  rest.erase("double_weight");
  try {
    base = network_spec_from_json(rest, std::move(base), false);
  } catch (const ValidationError& e) {
    // Re-anchor field names under "network".
    const std::string what = e.what();
    throw ValidationError("network." + e.field(), what.substr(e.field().size() + 2));
  }
  if (json.contains("hidden_units")) {
    const auto& widths = json["hidden_units"];
    if (!widths.is_array()) throw ValidationError("network.hidden_units", "expected an array of widths");
    std::vector<std::size_t> units;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      units.push_back(get_count(widths[i], "network.hidden_units[" + std::to_string(i) + "]"));
    }
    try {
      base = with_hidden_units(std::move(base), units);
    } catch (const std::invalid_argument& e) {
      throw ValidationError("network.hidden_units", e.what());
    }
  }
  if (json.contains("double_weight")) {
    base = with_double_weight(std::move(base), get_bool(json["double_weight"], "network.double_weight"));
  }
  return base;
}

fs::path env_data_dir() {
  const char* env = std::getenv("DWNET_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path();
}

bool has_all(const fs::path& dir, std::span<const char* const> names) {
  for (const char* name : names)
    if (!fs::is_regular_file(dir / name)) return false;
  return true;
}

fs::path resolve_data_dir(const DatasetConfig& dataset) {
  const bool mnist = dataset.kind == DatasetKind::mnist;
  const std::span<const char* const> files = mnist ? std::span<const char* const>(kMnistFiles)
                                                   : std::span<const char* const>(kCifarFiles);
  if (!dataset.dir.empty()) {
    for (const char* name : files) {
      if (!fs::is_regular_file(dataset.dir / name)) {
        throw ValidationError("dataset.dir", "missing file " + (dataset.dir / name).string());
      }
    }
    return dataset.dir;
  }
  const fs::path root = env_data_dir();
  if (root.empty()) {
    throw ValidationError("dataset.dir", std::string("no ") + (mnist ? "MNIST" : "CIFAR-10") +
                                             " directory given and DWNET_DATA_DIR is not set");
  }
  for (const fs::path& candidate : {root / (mnist ? "mnist" : "cifar-10-batches-bin"), root}) {
    if (has_all(candidate, files)) return candidate;
  }
  throw ValidationError("dataset.dir", std::string("DWNET_DATA_DIR=") + root.string() + " does not contain the " +
                                           (mnist ? "MNIST IDX" : "CIFAR-10 binary") + " files");
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::mnist: return "mnist";
    case DatasetKind::cifar10: return "cifar10";
    case DatasetKind::toy_two_gaussians: return "toy_two_gaussians";
    case DatasetKind::toy_xor: return "toy_xor";
  }
  return "?";
}

RunConfig parse_run_config(const Json& json, const fs::path& base_dir) {
  reject_unknown(json, {"schema_version", "dataset", "preset", "network", "experiment", "output_dir"}, "config");
  if (!json.contains("schema_version")) throw ValidationError("schema_version", "missing");
  if (!json["schema_version"].is_number_integer() || json["schema_version"].get<int>() != kConfigSchemaVersion) {
    throw ValidationError("schema_version", "unsupported version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }

  RunConfig config;
  if (json.contains("preset") && !json["preset"].is_null()) {
    config.preset = get_string(json["preset"], "preset");
    config.network = preset_or_error(*config.preset);
    config.dataset.kind = kind_for_preset(*config.preset);
  }
  if (json.contains("dataset")) parse_dataset(json["dataset"], base_dir, config.dataset);
  if (json.contains("network")) config.network = parse_network(json["network"], config.network);
  if (json.contains("experiment")) parse_experiment(json["experiment"], config.experiment);
  if (json.contains("output_dir")) config.output_dir = get_string(json["output_dir"], "output_dir");
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config", "cannot open " + path.string());
  Json json;
  try {
    json = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("--config", path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(json, fs::absolute(path).parent_path());
}

RunConfig preset_run_config(const std::string& name) {
  RunConfig config;
  config.preset = name;
  config.network = preset_or_error(name);
  config.dataset.kind = kind_for_preset(name);
  return config;
}

void validate_run_config(RunConfig& config) {
  try {
    validate(config.network);
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    throw ValidationError("network." + e.field(), what.substr(e.field().size() + 2));
  }
  const auto& exp = config.experiment;
  if (exp.eval_cadence == 0) throw ValidationError("experiment.eval_cadence", "must be >= 1");
  if (exp.test_subset_size == 0) throw ValidationError("experiment.test_subset_size", "must be >= 1");
  if (exp.n_seeds < 2) throw ValidationError("experiment.n_seeds", "must be >= 2");
  if (exp.n_seeds > 100000) throw ValidationError("experiment.n_seeds", "must be <= 100000");

  auto& ds = config.dataset;
  if (is_toy(ds.kind)) {
    if (ds.toy_train_size < 4) throw ValidationError("dataset.toy_train_size", "must be >= 4");
    if (ds.toy_test_size < 4) throw ValidationError("dataset.toy_test_size", "must be >= 4");
    if (!ds.dir.empty()) throw ValidationError("dataset.dir", "toy datasets are generated, not read from disk");
  } else {
    ds.dir = fs::absolute(resolve_data_dir(ds)).lexically_normal();
  }
  if (config.output_dir.empty()) throw ValidationError("output_dir", "must not be empty");
}

Json config_echo(const RunConfig& config) {
  Json dataset{{"kind", to_string(config.dataset.kind)}};
  if (is_toy(config.dataset.kind)) {
    dataset["toy_train_size"] = config.dataset.toy_train_size;
    dataset["toy_test_size"] = config.dataset.toy_test_size;
  } else {
    dataset["dir"] = config.dataset.dir.string();
  }
  dataset["train_limit"] = config.dataset.train_limit;
  const auto& exp = config.experiment;
  return Json{{"schema_version", kConfigSchemaVersion},
              {"dataset", std::move(dataset)},
              {"preset", config.preset ? Json(*config.preset) : Json(nullptr)},
              {"network", network_spec_to_json(config.network, false)},
              {"experiment",
               {{"n_seeds", exp.n_seeds},
                {"burn_in", exp.burn_in},
                {"master_seed", exp.master_seed},
                {"test_subset_size", exp.test_subset_size},
                {"eval_cadence", exp.eval_cadence},
                {"paired", exp.paired}}}};
}

Datasets load_datasets(const RunConfig& config) {
  const auto& ds = config.dataset;
  Datasets out;
  switch (ds.kind) {
    case DatasetKind::mnist:
      out.train = load_idx(ds.dir / kMnistFiles[0], ds.dir / kMnistFiles[1], Split::train);
      out.test = load_idx(ds.dir / kMnistFiles[2], ds.dir / kMnistFiles[3], Split::test);
      break;
    case DatasetKind::cifar10: {
      std::vector<fs::path> batches;
      for (int i = 0; i < 5; ++i) batches.push_back(ds.dir / kCifarFiles[i]);
      out.train = load_cifar10(batches, Split::train);
      out.test = load_cifar10({ds.dir / kCifarFiles[5]}, Split::test);
      break;
    }
    case DatasetKind::toy_two_gaussians:
    case DatasetKind::toy_xor: {
      const auto kind = ds.kind == DatasetKind::toy_xor ? ToyKind::xor_clusters : ToyKind::two_gaussians;
      Rng train_rng(derive_seed(config.experiment.master_seed, kToyTrainStream));
      Rng test_rng(derive_seed(config.experiment.master_seed, kToyTestStream));
      out.train = make_toy_dataset(train_rng, ds.toy_train_size, kind);
      out.test = make_toy_dataset(test_rng, ds.toy_test_size, kind);
      out.test.split = Split::test;
      break;
    }
  }
  if (ds.train_limit > 0) {
    if (ds.train_limit > out.train.size()) {
      throw ValidationError("dataset.train_limit", "exceeds the " + std::to_string(out.train.size()) +
                                                       " available training items");
    }
    out.train = out.train.slice(0, ds.train_limit);
  }
  if (config.network.batch_size > out.train.size()) {
    throw ValidationError("network.batch_size", "larger than the training set (" +
                                                    std::to_string(out.train.size()) + " items)");
  }
  if (out.train.item_shape() != config.network.input_shape) {
    throw ValidationError("network.input_shape", "network expects " + dwnet::to_string(config.network.input_shape) +
                                                     " but the dataset items are " +
                                                     dwnet::to_string(out.train.item_shape()));
  }
  if (num_classes(config.network) != out.train.num_classes) {
    throw ValidationError("network.layers", "output layer has " + std::to_string(num_classes(config.network)) +
                                                " units but the dataset has " +
                                                std::to_string(out.train.num_classes) + " classes");
  }
  return out;
}

}  // namespace dwnet::cli
