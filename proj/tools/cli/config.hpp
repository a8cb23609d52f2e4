#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dwnet/data.hpp"
#include "dwnet/experiment.hpp"
#include "dwnet/network.hpp"
#include "dwnet/spec_json.hpp"

namespace dwnet::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum class DatasetKind { mnist, cifar10, toy_two_gaussians, toy_xor };

std::string_view to_string(DatasetKind kind);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::mnist;
  // Empty means "look under DWNET_DATA_DIR".
  std::filesystem::path dir;
  std::size_t train_limit = 0;  // 0 keeps every training item
  std::size_t toy_train_size = 2000;
  std::size_t toy_test_size = 1000;
};

/// Everything one train/compare invocation needs. Built from a JSON config
/// file, then adjusted by command-line flags.
struct RunConfig {
  DatasetConfig dataset;
  std::optional<std::string> preset;
  NetworkSpec network;
  ExperimentConfig experiment;
  std::filesystem::path output_dir = "dwnet-out";
};

/// Reads and parses a config file. Relative dataset paths are resolved
/// against the file's directory. Throws ValidationError naming the field.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const Json& json, const std::filesystem::path& base_dir);

/// Config for a bare `--preset NAME` invocation.
RunConfig preset_run_config(const std::string& name);

/// Checks bounds and that the dataset files exist. Resolves an empty
/// dataset directory through DWNET_DATA_DIR.
void validate_run_config(RunConfig& config);

/// The resolved config in the file format, minus output_dir. Feeding it back
/// through parse_run_config reproduces the run.
Json config_echo(const RunConfig& config);

struct Datasets {
  Dataset train;
  Dataset test;
};

/// Loads (or, for toy kinds, generates) the train and test sets and checks
/// them against the network's input shape and class count.
Datasets load_datasets(const RunConfig& config);

}  // namespace dwnet::cli
