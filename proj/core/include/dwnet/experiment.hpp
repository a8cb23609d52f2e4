#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dwnet/data.hpp"
#include "dwnet/network.hpp"
#include "dwnet/spec_json.hpp"
#include "dwnet/stats.hpp"

namespace dwnet {

struct ExperimentConfig {
  std::size_t n_seeds = 10;
  std::size_t burn_in = 1500;
  std::uint64_t master_seed = 1;
  std::size_t jobs = 1;
  bool paired = true;
  /// Proceed (with a warning) when the two specs differ in more than the
  /// double-weight flags.
  bool allow_spec_mismatch = false;
  std::size_t test_subset_size = 1000;
  std::size_t eval_cadence = 1;
};

/// Seed of run `index` (1-based). Paired mode gives both variants the same
/// seed; unpaired mode draws variant B's seeds from a separate stream.
std::uint64_t run_seed(std::uint64_t master_seed, std::size_t index, bool variant_b, bool paired);

struct RunRecord {
  std::size_t index = 0;
  bool failed = false;
  std::string failure;
  SeedSummary summary;
  AccuracyCurve curve;
};

struct VariantReport {
  std::string label;
  NetworkSpec spec;
  std::vector<RunRecord> runs;  // ordered by index

  std::vector<double> accuracies() const;  // successful runs only
  std::size_t failed_count() const;
  double mean_wall_time() const;
};

struct ComparisonReport {
  VariantReport a;
  VariantReport b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double variance_a = 0.0;
  double variance_b = 0.0;
  WelchResult welch;
  double time_ratio = 0.0;  // mean wall time B / mean wall time A
  ExperimentConfig config;
};

using ProgressCallback = std::function<void(const std::string& label, const RunRecord& run)>;

/// Trains n_seeds runs of each variant and compares the burn-in-excluded
/// mean accuracies with a Welch t-test. Runs that hit a non-finite loss are
/// marked failed and left out of the statistics.
ComparisonReport run_comparison(const NetworkSpec& variant_a, const NetworkSpec& variant_b, const Dataset& train_set,
                                const Dataset& test_set, const ExperimentConfig& config,
                                const std::string& label_a = "standard", const std::string& label_b = "double_weight",
                                const ProgressCallback& progress = {});

/// Report without wall-clock fields; identical inputs give identical JSON.
Json report_to_json(const ComparisonReport& report);
/// Wall-clock fields: per-run seconds and the B/A time ratio.
Json timing_to_json(const ComparisonReport& report);
/// variant,seed_index,seed,status,mean_accuracy,final_accuracy
std::string seeds_csv(const ComparisonReport& report);
/// iteration,accuracy
std::string curve_csv(const AccuracyCurve& curve);

}  // namespace dwnet
