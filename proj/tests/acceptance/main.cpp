// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   dwnet_acceptance            all criteria
//   dwnet_acceptance --only 4   one criterion; exit 77 when it is skipped

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "dwnet/dwnet.hpp"
#include "support/fixtures.hpp"
#include "support/suites.hpp"

namespace fs = std::filesystem;
using namespace dwnet;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::pass : Status::fail, detail}; }

const fs::path kSource = DWNET_SOURCE_DIR;

int run_cli_quiet(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run_cli(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

// Gradient correctness on random small networks, plus the closed-form
// transcription of the one-hidden-layer double-weight backprop formulas.
Outcome ac1() {
  const auto start = Clock::now();
  std::size_t cases = 0, failures = 0;
  double worst = 0.0;
  std::string first;
  std::uint64_t seed = 1;
  for (const auto& combo : test::gradient_combinations()) {
    const test::SuiteResult r = test::gradient_check_suite(combo, 100, seed++);
    cases += r.cases;
    failures += r.failures;
    worst = std::max(worst, r.worst);
    if (first.empty() && !r.ok()) first = r.first_failure;
  }
  const test::SuiteResult oracle = test::two_layer_oracle_suite(100, 2018);
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << cases << " configurations over " << test::gradient_combinations().size() << " combinations, " << failures
    << " failed, worst rel err " << fmt(worst, 3) << "; closed form " << oracle.cases << " instances, worst abs diff "
    << fmt(oracle.worst, 3) << "; " << fmt(elapsed, 3) << " s";
  if (!first.empty()) d << "; first failure: " << first;
  if (!oracle.ok()) d << "; " << oracle.first_failure;
  return verdict(failures == 0 && oracle.ok() && oracle.worst <= 1e-10 && elapsed < 60.0, d.str());
}

Outcome ac2() {
  const auto start = Clock::now();
  const test::SuiteResult a = test::reparameterization_suite(1000, 11);
  const test::SuiteResult b = test::ones_gamma_suite(1000, 12);
  const test::SuiteResult c = test::swap_suite(1000, 13);
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << "reparameterization " << a.cases - a.failures << "/" << a.cases << ", gamma=ones " << b.cases - b.failures
    << "/" << b.cases << " (worst " << fmt(b.worst, 3) << "), swap " << c.cases - c.failures << "/" << c.cases << "; "
    << fmt(elapsed, 3) << " s";
  for (const auto* r : {&a, &b, &c}) {
    if (!r->ok()) d << "; " << r->first_failure;
  }
  return verdict(a.ok() && b.ok() && c.ok() && elapsed < 10.0, d.str());
}

Outcome ac3() {
  const test::SuiteResult ref = test::welch_reference_suite(DWNET_TEST_DATA_DIR "/welch_reference.json");
  const std::vector<double> same{0.91, 0.89, 0.93, 0.90};
  const WelchResult id = welch_t_test(same, same);
  const auto far = test::well_separated_samples(1);
  const WelchResult sep = welch_t_test(far[0], far[1]);
  std::ostringstream d;
  d << ref.cases << " reference cases, " << ref.failures << " off, worst p rel err " << fmt(ref.worst, 3)
    << "; identical samples t=" << id.t << " p=" << id.p_value << "; 150 vs 150 at 0.894/0.930: t=" << fmt(sep.t)
    << " df=" << fmt(sep.df) << " p=" << fmt(sep.p_value, 3);
  if (!ref.ok()) d << "; " << ref.first_failure;
  const bool ok = ref.ok() && ref.cases >= 51 && id.t == 0.0 && id.p_value == 1.0 && sep.p_value < 1e-40 &&
                  sep.p_value >= kPValueFloor;
  return verdict(ok, d.str());
}

std::string mnist_dir() {
  const std::string configured = DWNET_MNIST_DIR;
  if (!configured.empty() && fs::exists(fs::path(configured) / "train-images-idx3-ubyte")) return configured;
  if (const char* env = std::getenv("DWNET_DATA_DIR")) {
    for (const fs::path p : {fs::path(env) / "mnist", fs::path(env)}) {
      if (fs::exists(p / "train-images-idx3-ubyte")) return p.string();
    }
  }
  return {};
}

Outcome ac4() {
  const std::string data = mnist_dir();
  if (data.empty()) return {Status::skip, "MNIST IDX files not found (set DWNET_MNIST_DIR or DWNET_DATA_DIR)"};
  ::setenv("DWNET_DATA_DIR", data.c_str(), 1);
  test::TempDir out("ac4");
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto start = Clock::now();
  std::string log;
  const int code = run_cli_quiet({"compare", "--config", (kSource / "configs" / "mnist-fnn-desk.json").string(), "--out",
                                  out.path().string(), "--jobs", std::to_string(jobs)},
                                 &log);
  const double elapsed = seconds_since(start);
  if (code != 0) return {Status::fail, "compare exited " + std::to_string(code) + ": " + log};

  const Json report = Json::parse(test::read_text(out / "report.json"));
  const Json timing = Json::parse(test::read_text(out / "timing.json"));
  const double mean_std = report["variants"][0]["mean_accuracy"].get<double>();
  const double mean_dw = report["variants"][1]["mean_accuracy"].get<double>();
  const auto& w = report["welch"];
  const bool populated = w["t"].is_number() && w["df"].is_number() && w["p_value"].is_number() &&
                         timing["time_ratio"].is_number() && timing["time_ratio"].get<double>() > 0.0;
  std::ostringstream d;
  d << "SFNN " << fmt(mean_std, 5) << ", DWFNN " << fmt(mean_dw, 5) << ", gap DW-std " << std::showpos
    << fmt(mean_dw - mean_std, 3) << std::noshowpos << ", t=" << fmt(w["t"].get<double>()) << " df="
    << fmt(w["df"].get<double>()) << " p=" << fmt(w["p_value"].get<double>(), 3)
    << ", time ratio " << fmt(timing["time_ratio"].get<double>(), 3) << "; " << fmt(elapsed, 4) << " s with " << jobs
    << " job(s)";
  const bool ok = mean_std > 0.85 && mean_dw > 0.85 && mean_dw >= mean_std - 0.005 && populated && elapsed < 900.0;
  return verdict(ok, d.str());
}

Outcome ac5() {
  const std::string readme = test::read_text(kSource / "README.md");
  std::vector<std::string> missing;
  for (const char* anchor : {"0.894", "0.930", "0.978", "0.984", "0.455", "0.570", "1.46", "1.11", "1.07"}) {
    if (readme.find(anchor) == std::string::npos) missing.emplace_back(anchor);
  }
  std::ostringstream d;
  bool ok = missing.empty();
  if (!missing.empty()) {
    d << "README lacks";
    for (const auto& m : missing) d << " " << m;
    d << "; ";
  }
  try {
    const cli::RunConfig full = cli::load_run_config(kSource / "configs" / "mnist-fnn-full.json");
    const bool unmodified = full.network == preset("mnist-fnn") && full.dataset.train_limit == 0;
    const bool seeds = full.experiment.n_seeds == 150;
    ok = ok && unmodified && seeds;
    d << "configs/mnist-fnn-full.json: " << full.experiment.n_seeds << " seeds, preset "
      << (unmodified ? "unmodified" : "MODIFIED") << ", burn_in " << full.experiment.burn_in;
    for (const char* other : {"mnist-cnn-full.json", "cifar10-cnn-full.json"}) {
      const cli::RunConfig c = cli::load_run_config(kSource / "configs" / other);
      ok = ok && c.experiment.n_seeds == 150;
      d << "; " << other << " " << c.experiment.n_seeds << " seeds";
    }
  } catch (const std::exception& e) {
    ok = false;
    d << e.what();
  }
  return verdict(ok, d.str());
}

Outcome ac6() {
  test::TempDir dir("ac6");
  std::size_t rejected = 0, modes = 0;
  std::string leaked;
  for (const auto& c : test::corrupted_idx_corpus()) {
    ++modes;
    test::write_bytes(dir / "img", c.images);
    test::write_bytes(dir / "lbl", c.labels);
    try {
      load_idx(dir / "img", dir / "lbl");
      leaked += " idx:" + c.mode;
    } catch (const FormatError&) {
      ++rejected;
    } catch (const std::exception& e) {
      leaked += " idx:" + c.mode + "(" + e.what() + ")";
    }
  }
  std::size_t cifar_rejected = 0, cifar_modes = 0;
  for (const auto& c : test::corrupted_cifar_corpus()) {
    ++cifar_modes;
    test::write_bytes(dir / "c.bin", c.bytes);
    try {
      load_cifar10({dir / "c.bin"});
      leaked += " cifar:" + c.mode;
    } catch (const FormatError&) {
      ++cifar_rejected;
    } catch (const std::exception& e) {
      leaked += " cifar:" + c.mode + "(" + e.what() + ")";
    }
  }

  // Well-formed fixtures load with the right counts and values.
  test::write_mnist_fixture(dir / "m", 30, 10);
  const Dataset idx = load_idx(dir / "m" / "train-images-idx3-ubyte", dir / "m" / "train-labels-idx1-ubyte");
  test::Bytes three;
  for (std::uint8_t label : {0, 4, 9}) {
    const test::Bytes r = test::cifar_record(label, 255);
    three.insert(three.end(), r.begin(), r.end());
  }
  test::write_bytes(dir / "three.bin", three);
  const Dataset cifar = load_cifar10({dir / "three.bin"});
  bool ok = leaked.empty() && modes >= 6 && idx.size() == 30 && idx.item_shape() == Shape{28, 28, 1} &&
            cifar.size() == 3 && cifar.labels[2] == 9 && cifar.images == Tensor::ones({3, 32, 32, 3});

  std::ostringstream d;
  d << "IDX corpus " << rejected << "/" << modes << " rejected, CIFAR corpus " << cifar_rejected << "/" << cifar_modes
    << " rejected, fixtures load (" << idx.size() << " IDX, " << cifar.size() << " CIFAR records of 3073 bytes)";
  if (!leaked.empty()) d << "; accepted or crashed:" << leaked;

  const std::string real = mnist_dir();
  if (real.empty()) {
    d << "; official MNIST files absent, fixture checks only";
  } else {
    const fs::path r = real;
    const Dataset train = load_idx(r / "train-images-idx3-ubyte", r / "train-labels-idx1-ubyte");
    const Dataset test_set = load_idx(r / "t10k-images-idx3-ubyte", r / "t10k-labels-idx1-ubyte", Split::test);
    ok = ok && train.size() == 60000 && test_set.size() == 10000 && train.item_shape() == Shape{28, 28, 1};
    d << "; official MNIST " << train.size() << "/" << test_set.size();
  }
  return verdict(ok, d.str());
}

Outcome ac7() {
  test::TempDir a("ac7a"), b("ac7b"), c("ac7c");
  const std::string config = (kSource / "configs" / "toy.json").string();
  const auto start = Clock::now();
  int codes = 0;
  codes |= run_cli_quiet({"compare", "--config", config, "--out", a.path().string(), "--jobs", "1"});
  codes |= run_cli_quiet({"compare", "--config", config, "--out", b.path().string(), "--jobs", "4"});
  codes |= run_cli_quiet({"compare", "--config", config, "--out", c.path().string(), "--jobs", "4"});
  if (codes != 0) return {Status::fail, "compare failed"};
  const std::string ra = test::read_text(a / "report.json");
  const bool same = ra == test::read_text(b / "report.json") && ra == test::read_text(c / "report.json") &&
                    test::read_text(a / "seeds.csv") == test::read_text(b / "seeds.csv");
  std::ostringstream d;
  d << "toy compare run with --jobs 1, 4, 4: report.json " << (same ? "byte-identical" : "DIFFERS") << " ("
    << ra.size() << " bytes); " << fmt(seconds_since(start), 3) << " s";
  return verdict(same, d.str());
}

Outcome ac8() {
  const auto start = Clock::now();
  cli::RunConfig config = cli::load_run_config(kSource / "configs" / "toy.json");
  cli::validate_run_config(config);
  const cli::Datasets data = cli::load_datasets(config);
  std::ostringstream d;
  bool ok = config.network.iterations <= 500 && config.dataset.kind == cli::DatasetKind::toy_two_gaussians;
  for (bool dw : {false, true}) {
    NetworkSpec spec = with_double_weight(config.network, dw);
    std::size_t hits = 0;
    double lowest = 1.0;
    for (std::size_t i = 1; i <= 10; ++i) {
      spec.seed = run_seed(config.experiment.master_seed, i, dw, true);
      const TrainResult r = train(spec, data.train);
      const double acc = evaluate_accuracy(r.model, data.test);
      lowest = std::min(lowest, acc);
      hits += acc >= 0.95;
    }
    ok = ok && hits >= 9;
    d << (dw ? "; double-weight " : "standard ") << hits << "/10 seeds >= 0.95 (lowest " << fmt(lowest) << ")";
  }
  const double elapsed = seconds_since(start);
  d << "; " << config.network.iterations << " iterations, " << fmt(elapsed, 3) << " s";
  return verdict(ok && elapsed < 30.0, d.str());
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dwnet acceptance suite"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "gradient correctness", ac1},          {2, "reparameterization and symmetry", ac2},
      {3, "Welch t-test oracle", ac3},           {4, "desk-scale MNIST FNN comparison", ac4},
      {5, "full-scale reproduction path", ac5}, {6, "data-format conformance", ac6},
      {7, "comparison determinism", ac7},        {8, "toy convergence", ac8},
  };

  int failed = 0, skipped = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << "AC" << c.id << " " << tag << "  " << c.title << ": " << o.detail << std::endl;
    failed += o.status == Status::fail;
    skipped += o.status == Status::skip;
  }
  if (failed) return 1;
  if (only && skipped == ran) return 77;
  return 0;
}
