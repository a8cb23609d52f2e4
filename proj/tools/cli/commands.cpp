#include "cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "dwnet/checkpoint.hpp"
#include "dwnet/errors.hpp"
#include "dwnet/experiment.hpp"
#include "dwnet/training.hpp"

namespace dwnet::cli {

namespace fs = std::filesystem;

namespace {

// Usage problems found after argument parsing (conflicting flags, bad report).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::size_t> iterations;
  std::optional<std::uint64_t> master_seed;
};

struct TrainOptions {
  bool double_weight = false;
};

struct CompareOptions {
  std::optional<std::size_t> seeds;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  bool unpaired = false;
};

struct GradcheckOptions {
  std::string config_path;
  std::string preset;
  double scale = 1.0;
  bool double_weight = false;
  double epsilon = 1e-5;
  std::optional<double> init_sigma;  // unset: fan-in scaled draws
  std::uint64_t seed = 1;
  std::size_t batch = 1;
  bool corrupt_backward = false;
};

struct ReportOptions {
  std::string report_path;
  std::string out_dir;
  std::size_t bins = 20;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON run config");
  cmd->add_option("--preset", o.preset, "mnist-fnn, mnist-cnn or cifar10-cnn");
  cmd->add_option("--out", o.out_dir, "output directory (overrides output_dir)");
  cmd->add_option("--iterations", o.iterations, "training iterations per run");
  cmd->add_option("--seed", o.master_seed, "master seed (overrides experiment.master_seed)");
}

RunConfig resolve_config(const CommonOptions& o) {
  if (!o.config_path.empty() && !o.preset.empty()) throw UsageError("use either --config or --preset, not both");
  if (o.config_path.empty() && o.preset.empty()) throw UsageError("one of --config or --preset is required");
  RunConfig config = o.config_path.empty() ? preset_run_config(o.preset) : load_run_config(o.config_path);
  if (!o.out_dir.empty()) config.output_dir = o.out_dir;
  if (o.iterations) config.network.iterations = *o.iterations;
  if (o.master_seed) config.experiment.master_seed = *o.master_seed;
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

bool has_conv(const NetworkSpec& spec) {
  return std::any_of(spec.layers.begin(), spec.layers.end(),
                     [](const LayerSpec& l) { return std::holds_alternative<ConvSpec>(l); });
}

struct SummaryRow {
  std::string label;
  std::size_t n = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double variance = 0.0;
};

void print_summary(std::ostream& out, const SummaryRow& a, const SummaryRow& b, const WelchResult& welch,
                   std::optional<double> time_ratio) {
  out << std::left << std::setw(10) << "variant" << std::setw(7) << "runs" << std::setw(8) << "failed"
      << std::setw(15) << "mean_accuracy" << "std_accuracy\n";
  for (const auto* row : {&a, &b}) {
    out << std::left << std::setw(10) << row->label << std::setw(7) << row->n << std::setw(8) << row->failed
        << std::setw(15) << fixed(row->mean, 4) << fixed(std::sqrt(row->variance), 4) << "\n";
  }
  out << "\n"
      << std::left << std::setw(12) << "t" << std::setw(12) << "df" << std::setw(16) << "p (two-sided)"
      << "time_ratio (" << b.label << "/" << a.label << ")\n"
      << std::setw(12) << fixed(welch.t, 4) << std::setw(12) << fixed(welch.df, 2) << std::setw(16)
      << sci(welch.p_value) << (time_ratio ? fixed(*time_ratio, 3) : std::string("n/a")) << "\n";
}

int cmd_train(const CommonOptions& common, const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig config = resolve_config(common);
  if (opts.double_weight) config.network = with_double_weight(config.network, true);
  validate_run_config(config);
  const Datasets data = load_datasets(config);

  NetworkSpec spec = config.network;
  spec.seed = run_seed(config.experiment.master_seed, 1, false, true);
  fs::create_directories(config.output_dir);

  Trainer trainer(spec, data.train);
  AccuracyCurve curve;
  double last_loss = 0.0;
  EvalOptions eval{&data.test, config.experiment.test_subset_size, config.experiment.eval_cadence};
  const std::size_t report_every = std::max<std::size_t>(1, spec.iterations / 10);
  const auto start = std::chrono::steady_clock::now();
  trainer.run(eval, [&](const IterationRecord& r) {
    last_loss = r.train_loss;
    if (r.test_accuracy) curve.add(r.iteration, *r.test_accuracy);
    if (r.iteration % report_every == 0) {
      err << "iteration " << r.iteration << "/" << spec.iterations << "  loss " << fixed(r.train_loss, 5) << "\n";
    }
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double final_accuracy =
      evaluate_accuracy(trainer.model(), data.test, 0, std::min(config.experiment.test_subset_size, data.test.size()));

  Json params = Json::array();
  for (const auto& p : trainer.model().parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.tensor->shape()}});
  }
  std::optional<double> mean_after_burn_in;
  try {
    mean_after_burn_in = summarize_run(curve, config.experiment.burn_in).mean_accuracy;
  } catch (const ArgumentError&) {
  }
  Json summary{{"schema", "dwnet.train/1"},
               {"config", config_echo(config)},
               {"spec", network_spec_to_json(spec)},
               {"parameters", std::move(params)},
               {"parameter_count", trainer.model().parameter_count()},
               {"iterations", trainer.iteration()},
               {"final_train_loss", last_loss},
               {"final_test_accuracy", final_accuracy},
               {"mean_accuracy_after_burn_in", mean_after_burn_in ? Json(*mean_after_burn_in) : Json(nullptr)}};

  write_text(config.output_dir / "curve.csv", curve_csv(curve));
  save_checkpoint(config.output_dir / "model.ckpt", trainer);
  write_text(config.output_dir / "summary.json", dump(summary));

  out << "trained " << spec.name << (std::get<DenseSpec>(spec.layers.back()).double_weight ? " (double-weight)" : "")
      << ": " << trainer.iteration() << " iterations in " << fixed(seconds, 1) << " s, test accuracy "
      << fixed(final_accuracy, 4) << "\n"
      << "wrote " << (config.output_dir / "summary.json").string() << ", curve.csv, model.ckpt\n";
  return kExitOk;
}

int cmd_compare(const CommonOptions& common, const CompareOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig config = resolve_config(common);
  if (opts.seeds) config.experiment.n_seeds = *opts.seeds;
  if (opts.unpaired) config.experiment.paired = false;
  if (opts.jobs == 0) throw UsageError("--jobs must be >= 1");
  config.experiment.jobs = opts.jobs;
  validate_run_config(config);
  const Datasets data = load_datasets(config);

  const NetworkSpec spec_a = with_double_weight(config.network, false);
  const NetworkSpec spec_b = with_double_weight(config.network, true);
  const bool cnn = has_conv(spec_a);
  const std::string label_a = cnn ? "SCNN" : "SFNN";
  const std::string label_b = cnn ? "DWCNN" : "DWFNN";
  const std::size_t n = config.experiment.n_seeds;

  const ComparisonReport report =
      run_comparison(spec_a, spec_b, data.train, data.test, config.experiment, label_a, label_b,
                     [&](const std::string& label, const RunRecord& run) {
                       err << "[" << label << " seed " << run.index << "/" << n << "] ";
                       if (run.failed) {
                         err << "failed: " << run.failure << "\n";
                       } else {
                         err << "mean accuracy " << fixed(run.summary.mean_accuracy, 4) << " ("
                             << fixed(run.summary.wall_time, 1) << " s)\n";
                       }
                     });

  Json json = report_to_json(report);
  json["config"] = config_echo(config);

  const fs::path dir = config.output_dir;
  fs::create_directories(dir / "curves");
  write_text(dir / "report.json", dump(json));
  write_text(dir / "timing.json", dump(timing_to_json(report)));
  write_text(dir / "seeds.csv", seeds_csv(report));
  for (const auto* v : {&report.a, &report.b}) {
    for (const auto& run : v->runs) {
      if (run.failed) continue;
      std::ostringstream name;
      name << v->label << "_seed" << std::setw(3) << std::setfill('0') << run.index << ".csv";
      write_text(dir / "curves" / name.str(), curve_csv(run.curve));
    }
  }

  const SummaryRow a{label_a, report.a.runs.size() - report.a.failed_count(), report.a.failed_count(), report.mean_a,
                     report.variance_a};
  const SummaryRow b{label_b, report.b.runs.size() - report.b.failed_count(), report.b.failed_count(), report.mean_b,
                     report.variance_b};
  print_summary(out, a, b, report.welch, report.time_ratio);
  out << "\nwrote " << (dir / "report.json").string() << ", timing.json, seeds.csv, curves/\n";
  return kExitOk;
}

NetworkSpec scale_spec(NetworkSpec spec, double scale) {
  auto scaled = [scale](std::size_t v) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(v) * scale)));
  };
  spec.input_shape[0] = scaled(spec.input_shape[0]);
  spec.input_shape[1] = scaled(spec.input_shape[1]);
  for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
    if (auto* dense = std::get_if<DenseSpec>(&spec.layers[i])) dense->units = scaled(dense->units);
    if (auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) conv->depth = scaled(conv->depth);
  }
  return spec;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out) {
  if (!opts.config_path.empty() && !opts.preset.empty()) throw UsageError("use either --config or --preset, not both");
  if (opts.config_path.empty() && opts.preset.empty()) throw UsageError("one of --config or --preset is required");
  if (!(opts.scale > 0.0) || !std::isfinite(opts.scale)) throw UsageError("--scale must be a positive number");
  if (!(opts.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
  if (opts.batch == 0) throw UsageError("--batch must be >= 1");
  if (opts.init_sigma && (!(*opts.init_sigma > 0.0) || !std::isfinite(*opts.init_sigma))) {
    throw UsageError("--init-sigma must be positive");
  }

  NetworkSpec spec = opts.config_path.empty() ? preset_run_config(opts.preset).network
                                              : load_run_config(opts.config_path).network;
  spec = scale_spec(std::move(spec), opts.scale);
  if (opts.double_weight) spec = with_double_weight(std::move(spec), true);
  if (opts.init_sigma) spec.init.weight_sigma = *opts.init_sigma;
  try {
    validate(spec);
  } catch (const ValidationError& e) {
    throw ValidationError("network." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }

  Rng init_rng(derive_seed(opts.seed, 0));
  Model model = build_network(spec, init_rng);
  if (model.parameter_count() > kGradientCheckMaxParameters) {
    throw UsageError("scaled network has " + std::to_string(model.parameter_count()) +
                     " parameters, above the gradient-check limit of " +
                     std::to_string(kGradientCheckMaxParameters) + "; lower --scale");
  }

  // The training init (sigma 0.1, products of two small factors in
  // double-weight layers) leaves early-layer gradients near 1e-7, below what
  // central differences resolve; the default redraws a well-conditioned model.
  Rng data_rng(derive_seed(opts.seed, 2));
  const auto [x, y] = prepare_gradient_check(model, opts.batch, data_rng, !opts.init_sigma);

  GradientTamper tamper;
  if (opts.corrupt_backward) {
    tamper = [](std::vector<Tensor>& grads) {
      for (auto& g : grads)
        for (auto& v : g.data()) v = v * 1.1 + 1e-3;
    };
  }
  const auto report = gradient_check(model, x, y, opts.epsilon, tamper);
  constexpr double tolerance = 1e-4;

  out << spec.name << " scale " << opts.scale << (opts.double_weight ? " double-weight" : "") << ", "
      << model.parameter_count() << " parameters, batch " << opts.batch << ", init "
      << (opts.init_sigma ? "sigma " + std::to_string(*opts.init_sigma) : std::string("fan-in scaled")) << ", epsilon " << opts.epsilon << "\n";
  out << std::left << std::setw(20) << "tensor" << std::setw(10) << "elements" << std::setw(14) << "max_rel_error"
      << std::setw(14) << "analytic" << "numeric\n";
  for (const auto& t : report.tensors) {
    out << std::left << std::setw(20) << t.name << std::setw(10) << t.elements << std::setw(14) << sci(t.max_relative_error)
        << std::setw(14) << sci(t.worst_analytic) << sci(t.worst_numeric) << (t.max_relative_error < tolerance ? "" : "  FAIL") << "\n";
  }
  const bool ok = report.passed(tolerance);
  out << (ok ? "PASS" : "FAIL") << ": max relative error " << sci(report.max_relative_error()) << " (tolerance "
      << sci(tolerance) << ")\n";
  return ok ? kExitOk : kExitRuntime;
}

struct LoadedVariant {
  std::string label;
  std::vector<double> accuracies;
  std::size_t failed = 0;
};

const Json& field(const Json& json, const std::string& key, const std::string& where) {
  if (!json.is_object() || !json.contains(key)) throw UsageError("malformed report: missing " + where + key);
  return json[key];
}

double number(const Json& json, const std::string& key, const std::string& where) {
  const Json& v = field(json, key, where);
  if (!v.is_number()) throw UsageError("malformed report: " + where + key + " is not a number");
  return v.get<double>();
}

std::vector<std::pair<std::size_t, double>> curve_points(const Json& json, const std::string& where) {
  if (!json.is_array()) throw UsageError("malformed report: " + where + " is not an array");
  std::vector<std::pair<std::size_t, double>> points;
  for (const auto& p : json) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number()) {
      throw UsageError("malformed report: " + where + " entries must be [iteration, accuracy]");
    }
    points.emplace_back(p[0].get<std::size_t>(), p[1].get<double>());
  }
  return points;
}

int cmd_report(const ReportOptions& opts, std::ostream& out) {
  if (opts.bins == 0) throw UsageError("--bins must be >= 1");
  std::ifstream in(opts.report_path);
  if (!in) throw UsageError("cannot open report " + opts.report_path);
  Json json;
  try {
    json = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("malformed report: ") + e.what());
  }

  const Json& variants = field(json, "variants", "");
  if (!variants.is_array() || variants.size() != 2) throw UsageError("malformed report: expected two variants");
  std::vector<LoadedVariant> loaded;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string where = "variants[" + std::to_string(i) + "].";
    const Json& v = variants[i];
    LoadedVariant lv;
    const Json& label = field(v, "label", where);
    if (!label.is_string()) throw UsageError("malformed report: " + where + "label is not a string");
    lv.label = label.get<std::string>();
    const Json& seeds = field(v, "seeds", where);
    if (!seeds.is_array()) throw UsageError("malformed report: " + where + "seeds is not an array");
    if (seeds.empty()) throw UsageError("report has an empty seed list for " + lv.label);
    for (const auto& s : seeds) lv.accuracies.push_back(number(s, "mean_accuracy", where + "seeds[]."));
    if (v.contains("failed_seeds") && v["failed_seeds"].is_array()) lv.failed = v["failed_seeds"].size();
    loaded.push_back(std::move(lv));
  }
  const Json& welch_json = field(json, "welch", "");
  WelchResult welch;
  welch.t = number(welch_json, "t", "welch.");
  welch.df = number(welch_json, "df", "welch.");
  welch.p_value = number(welch_json, "p_value", "welch.");

  const fs::path report_path = opts.report_path;
  std::optional<double> time_ratio;
  const fs::path timing_path = report_path.parent_path() / "timing.json";
  if (fs::exists(timing_path)) {
    std::ifstream tin(timing_path);
    const Json timing = Json::parse(tin, nullptr, false);
    if (!timing.is_discarded() && timing.contains("time_ratio") && timing["time_ratio"].is_number()) {
      time_ratio = timing["time_ratio"].get<double>();
    }
  }

  auto row = [](const LoadedVariant& v) {
    SummaryRow r{v.label, v.accuracies.size(), v.failed, mean(v.accuracies), 0.0};
    if (v.accuracies.size() >= 2) r.variance = sample_variance(v.accuracies);
    return r;
  };
  print_summary(out, row(loaded[0]), row(loaded[1]), welch, time_ratio);

  const fs::path dir = opts.out_dir.empty() ? report_path.parent_path() : fs::path(opts.out_dir);
  if (!dir.empty()) fs::create_directories(dir);

  const Histogram hist = histogram({loaded[0].accuracies, loaded[1].accuracies}, opts.bins);
  std::ostringstream h;
  h.precision(17);
  h << "bin_lower,bin_upper," << loaded[0].label << "," << loaded[1].label << "\n";
  for (std::size_t i = 0; i < opts.bins; ++i) {
    h << hist.edges[i] << "," << hist.edges[i + 1] << "," << hist.counts[0][i] << "," << hist.counts[1][i] << "\n";
  }
  write_text(dir / "histogram.csv", h.str());

  std::ostringstream c;
  c.precision(17);
  c << "iteration,accuracy_a,accuracy_b,difference\n";
  if (json.contains("example_curves")) {
    const Json& curves = json["example_curves"];
    const auto a = curve_points(field(curves, "a", "example_curves."), "example_curves.a");
    const auto b = curve_points(field(curves, "b", "example_curves."), "example_curves.b");
    std::size_t j = 0;
    for (const auto& [iteration, acc_a] : a) {
      while (j < b.size() && b[j].first < iteration) ++j;
      if (j < b.size() && b[j].first == iteration) {
        c << iteration << "," << acc_a << "," << b[j].second << "," << b[j].second - acc_a << "\n";
      }
    }
  }
  write_text(dir / "curve.csv", c.str());
  out << "\nwrote " << (dir / "histogram.csv").string() << ", curve.csv\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double-weight neural network training and comparison tool", "dwnet"};
  app.require_subcommand(1);

  CommonOptions train_common, compare_common;
  TrainOptions train_opts;
  CompareOptions compare_opts;
  GradcheckOptions grad_opts;
  ReportOptions report_opts;

  auto* train = app.add_subcommand("train", "train one model; writes curve.csv, model.ckpt, summary.json");
  add_common(train, train_common);
  train->add_flag("--double-weight", train_opts.double_weight, "use double-weight dense layers");

  auto* compare = app.add_subcommand("compare", "standard vs double-weight over many seeds with a Welch t-test");
  add_common(compare, compare_common);
  compare->add_option("--seeds", compare_opts.seeds, "runs per variant (overrides experiment.n_seeds)");
  compare->add_option("--jobs", compare_opts.jobs, "parallel training runs (default: available cores)");
  compare->add_flag("--unpaired", compare_opts.unpaired, "draw the double-weight seeds from a separate stream");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of a scaled-down architecture");
  gradcheck->add_option("--config", grad_opts.config_path, "JSON run config supplying the network");
  gradcheck->add_option("--preset", grad_opts.preset, "mnist-fnn, mnist-cnn or cifar10-cnn");
  gradcheck->add_option("--scale", grad_opts.scale, "width and input-size factor (default 1)");
  gradcheck->add_flag("--double-weight", grad_opts.double_weight, "use double-weight dense layers");
  gradcheck->add_option("--epsilon", grad_opts.epsilon, "finite-difference step (default 1e-5)");
  gradcheck->add_option("--init-sigma", grad_opts.init_sigma, "fixed sigma for weights and gamma (default: fan-in scaled)");
  gradcheck->add_option("--seed", grad_opts.seed, "seed for weights and the random batch");
  gradcheck->add_option("--batch", grad_opts.batch, "random batch size (default 1)");
  gradcheck->add_flag("--corrupt-backward", grad_opts.corrupt_backward)->group("");

  auto* report = app.add_subcommand("report", "summary table, histogram.csv and curve.csv from a report.json");
  report->add_option("report", report_opts.report_path, "report.json written by compare")->required();
  report->add_option("--out", report_opts.out_dir, "output directory (default: next to the report)");
  report->add_option("--bins", report_opts.bins, "histogram bins (default 20)");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_common, train_opts, out, err);
    if (*compare) return cmd_compare(compare_common, compare_opts, out, err);
    if (*gradcheck) return cmd_gradcheck(grad_opts, out);
    return cmd_report(report_opts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace dwnet::cli
