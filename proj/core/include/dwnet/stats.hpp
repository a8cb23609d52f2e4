#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dwnet {

/// (iteration, test accuracy) pairs of one run, iterations strictly increasing.
struct AccuracyCurve {
  std::vector<std::pair<std::size_t, double>> points;

  void add(std::size_t iteration, double accuracy);
};

struct SeedSummary {
  std::uint64_t seed = 0;
  double mean_accuracy = 0.0;   // over points with iteration > burn_in
  double final_accuracy = 0.0;  // last recorded point
  double wall_time = 0.0;       // seconds
};

/// Mean accuracy over points strictly after `burn_in`. ArgumentError when no
/// point qualifies.
SeedSummary summarize_run(const AccuracyCurve& curve, std::size_t burn_in);

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> xs);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided, floored at kPValueFloor
};

/// Smallest p-value ever reported; smaller tail masses are clamped up to it.
inline constexpr double kPValueFloor = 1e-300;

/// Two-sided Welch t-test of mean(a) == mean(b). Variances are unbiased,
/// df follows Welch-Satterthwaite and the tail probability comes from the
/// regularized incomplete beta, p = I_{df/(df+t^2)}(df/2, 1/2).
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Equal-width bins spanning [lo, hi]; the last bin is closed.
struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::vector<std::size_t>> counts;  // one row per sample set
};
Histogram histogram(const std::vector<std::vector<double>>& samples, std::size_t bins);

}  // namespace dwnet
