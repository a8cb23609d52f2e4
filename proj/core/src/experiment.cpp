#include "dwnet/experiment.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dwnet/errors.hpp"
#include "dwnet/rng.hpp"
#include "dwnet/training.hpp"

namespace dwnet {

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t index, bool variant_b, bool paired) {
  const std::uint64_t stream_root = (variant_b && !paired) ? derive_seed(master_seed, 0xB0B) : master_seed;
  return derive_seed(stream_root, index);
}

std::vector<double> VariantReport::accuracies() const {
  std::vector<double> out;
  for (const auto& run : runs)
    if (!run.failed) out.push_back(run.summary.mean_accuracy);
  return out;
}

std::size_t VariantReport::failed_count() const {
  std::size_t n = 0;
  for (const auto& run : runs) n += run.failed ? 1 : 0;
  return n;
}

double VariantReport::mean_wall_time() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& run : runs) {
    if (!run.failed) {
      total += run.summary.wall_time;
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

namespace {

RunRecord execute_run(const NetworkSpec& base, std::size_t index, std::uint64_t seed, const Dataset& train_set,
                      const Dataset& test_set, const ExperimentConfig& config) {
  NetworkSpec spec = base;
  spec.seed = seed;
  RunRecord record;
  record.index = index;
  EvalOptions eval{&test_set, config.test_subset_size, config.eval_cadence};
  try {
    Trainer trainer(spec, train_set);
    const auto start = std::chrono::steady_clock::now();
    trainer.run(eval, [&](const IterationRecord& it) {
      if (it.test_accuracy) record.curve.add(it.iteration, *it.test_accuracy);
    });
    const auto stop = std::chrono::steady_clock::now();
    record.summary = summarize_run(record.curve, config.burn_in);
    record.summary.wall_time = std::chrono::duration<double>(stop - start).count();
  } catch (const NumericError& e) {
    record.failed = true;
    record.failure = e.what();
  }
  record.summary.seed = seed;
  return record;
}

void check_config(const NetworkSpec& a, const NetworkSpec& b, const ExperimentConfig& config) {
  if (config.n_seeds < 2) throw ValidationError("experiment.n_seeds", "at least 2 seeds are required");
  if (config.eval_cadence == 0) throw ValidationError("experiment.eval_cadence", "must be >= 1");
  if (config.test_subset_size == 0) throw ValidationError("experiment.test_subset_size", "must be >= 1");
  for (const auto* spec : {&a, &b}) {
    // Some evaluation point must land after the burn-in.
    const std::size_t last_eval = spec->iterations / config.eval_cadence * config.eval_cadence;
    if (last_eval <= config.burn_in) {
      throw ValidationError("experiment.burn_in", "no evaluation happens after burn_in = " +
                                                      std::to_string(config.burn_in) + " within " +
                                                      std::to_string(spec->iterations) + " iterations");
    }
  }
  if (!same_except_double_weight(a, b)) {
    if (!config.allow_spec_mismatch) {
      throw ValidationError("network", "compared variants differ in more than their double-weight flags");
    }
    std::cerr << "warning: compared variants differ in more than their double-weight flags\n";
  }
}

}  // namespace

ComparisonReport run_comparison(const NetworkSpec& variant_a, const NetworkSpec& variant_b, const Dataset& train_set,
                                const Dataset& test_set, const ExperimentConfig& config, const std::string& label_a,
                                const std::string& label_b, const ProgressCallback& progress) {
  check_config(variant_a, variant_b, config);
  validate(variant_a);
  validate(variant_b);

  const std::size_t n = config.n_seeds;
  std::vector<RunRecord> results(2 * n);
  std::vector<std::exception_ptr> errors(2 * n);
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t task = next++; task < 2 * n; task = next++) {
      const bool is_b = task % 2 == 1;
      const std::size_t index = task / 2 + 1;
      try {
        results[task] = execute_run(is_b ? variant_b : variant_a, index,
                                    run_seed(config.master_seed, index, is_b, config.paired), train_set, test_set,
                                    config);
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress(is_b ? label_b : label_a, results[task]);
        }
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, 2 * n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);

  ComparisonReport report;
  report.config = config;
  report.a.label = label_a;
  report.b.label = label_b;
  report.a.spec = variant_a;
  report.b.spec = variant_b;
  for (std::size_t task = 0; task < 2 * n; ++task) {
    (task % 2 ? report.b : report.a).runs.push_back(std::move(results[task]));
  }

  const auto acc_a = report.a.accuracies();
  const auto acc_b = report.b.accuracies();
  if (acc_a.size() < 2 || acc_b.size() < 2) {
    throw NumericError("too many failed runs: " + std::to_string(report.a.failed_count()) + " " + label_a + ", " +
                       std::to_string(report.b.failed_count()) + " " + label_b);
  }
  report.mean_a = mean(acc_a);
  report.mean_b = mean(acc_b);
  report.variance_a = sample_variance(acc_a);
  report.variance_b = sample_variance(acc_b);
  report.welch = welch_t_test(acc_a, acc_b);
  const double time_a = report.a.mean_wall_time();
  report.time_ratio = time_a > 0.0 ? report.b.mean_wall_time() / time_a : 0.0;
  return report;
}

namespace {

Json variant_json(const VariantReport& v, double mean_value, double variance) {
  Json runs = Json::array();
  Json failed = Json::array();
  for (const auto& run : v.runs) {
    Json entry{{"seed_index", run.index}, {"seed", run.summary.seed}};
    if (run.failed) {
      entry["failure"] = run.failure;
      failed.push_back(std::move(entry));
    } else {
      entry["mean_accuracy"] = run.summary.mean_accuracy;
      entry["final_accuracy"] = run.summary.final_accuracy;
      runs.push_back(std::move(entry));
    }
  }
  return Json{{"label", v.label},
              {"spec", network_spec_to_json(v.spec, false)},
              {"n", v.runs.size() - v.failed_count()},
              {"failed_count", v.failed_count()},
              {"mean_accuracy", mean_value},
              {"variance", variance},
              {"seeds", std::move(runs)},
              {"failed_seeds", std::move(failed)}};
}

Json curve_points(const AccuracyCurve& curve) {
  Json points = Json::array();
  for (const auto& [it, acc] : curve.points) points.push_back(Json::array({it, acc}));
  return points;
}

}  // namespace

Json report_to_json(const ComparisonReport& report) {
  const auto& c = report.config;
  Json out{{"schema", "dwnet.comparison/1"},
           {"rng_algorithm", Rng::algorithm},
           {"pixel_normalization", "x/255"},
           {"experiment",
            {{"n_seeds", c.n_seeds},
             {"burn_in", c.burn_in},
             {"master_seed", c.master_seed},
             {"paired", c.paired},
             {"test_subset_size", c.test_subset_size},
             {"eval_cadence", c.eval_cadence}}},
           {"variants", Json::array({variant_json(report.a, report.mean_a, report.variance_a),
                                     variant_json(report.b, report.mean_b, report.variance_b)})},
           {"welch",
            {{"t", report.welch.t},
             {"df", report.welch.df},
             {"p_value", report.welch.p_value},
             {"sided", "two-sided"},
             {"p_floor", kPValueFloor}}},
           {"mean_difference", report.mean_b - report.mean_a}};

  // First index where both variants finished gives the example curves.
  for (std::size_t i = 0; i < report.a.runs.size() && i < report.b.runs.size(); ++i) {
    if (!report.a.runs[i].failed && !report.b.runs[i].failed) {
      out["example_curves"] = {{"seed_index", report.a.runs[i].index},
                               {"a", curve_points(report.a.runs[i].curve)},
                               {"b", curve_points(report.b.runs[i].curve)}};
      break;
    }
  }
  return out;
}

Json timing_to_json(const ComparisonReport& report) {
  Json variants = Json::array();
  for (const auto* v : {&report.a, &report.b}) {
    Json seconds = Json::array();
    for (const auto& run : v->runs) seconds.push_back(run.failed ? Json(nullptr) : Json(run.summary.wall_time));
    variants.push_back({{"label", v->label}, {"mean_wall_time", v->mean_wall_time()}, {"wall_time", seconds}});
  }
  return Json{{"schema", "dwnet.timing/1"},
              {"measure", "training wall time per run, data loading excluded"},
              {"time_ratio", report.time_ratio},
              {"variants", std::move(variants)}};
}

std::string seeds_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "variant,seed_index,seed,status,mean_accuracy,final_accuracy\n";
  for (const auto* v : {&report.a, &report.b}) {
    for (const auto& run : v->runs) {
      out << v->label << ',' << run.index << ',' << run.summary.seed << ',';
      if (run.failed) {
        out << "failed,,\n";
      } else {
        out << "ok," << run.summary.mean_accuracy << ',' << run.summary.final_accuracy << '\n';
      }
    }
  }
  return out.str();
}

std::string curve_csv(const AccuracyCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,accuracy\n";
  for (const auto& [it, acc] : curve.points) out << it << ',' << acc << '\n';
  return out.str();
}

}  // namespace dwnet
