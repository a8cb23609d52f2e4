#include "dwnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "dwnet/errors.hpp"

namespace dwnet {

void AccuracyCurve::add(std::size_t iteration, double accuracy) {
  if (!points.empty() && iteration <= points.back().first) {
    throw ArgumentError("curve iterations must strictly increase");
  }
  points.emplace_back(iteration, accuracy);
}

SeedSummary summarize_run(const AccuracyCurve& curve, std::size_t burn_in) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [iteration, accuracy] : curve.points) {
    if (iteration > burn_in) {
      total += accuracy;
      ++count;
    }
  }
  if (count == 0) {
    throw ArgumentError("no accuracy points after burn_in = " + std::to_string(burn_in));
  }
  SeedSummary summary;
  summary.mean_accuracy = total / static_cast<double>(count);
  summary.final_accuracy = curve.points.back().second;
  return summary;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("mean of an empty sample");
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ArgumentError("sample variance needs at least 2 values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("Welch t-test needs at least 2 values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a), vb = sample_variance(b);
  if (va == 0.0 && vb == 0.0) {
    throw ArgumentError(ma == mb ? "degenerate Welch input: both samples constant with equal means"
                                 : "degenerate Welch input: both samples have zero variance");
  }
  const double sa = va / na, sb = vb / nb;
  const double se2 = sa + sb;

  WelchResult result;
  result.t = (ma - mb) / std::sqrt(se2);
  result.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const double t2 = result.t * result.t;
  const double x = result.df / (result.df + t2);
  const double p = t2 == 0.0 ? 1.0 : boost::math::ibeta(result.df / 2.0, 0.5, x);
  result.p_value = std::max(p, kPValueFloor);
  return result;
}

Histogram histogram(const std::vector<std::vector<double>>& samples, std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram needs at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : samples)
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) throw ArgumentError("histogram of empty samples");
  if (hi == lo) {
    lo -= 0.5e-3;
    hi += 0.5e-3;
  }
  Histogram h;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(lo + width * static_cast<double>(i));
  h.edges.back() = hi;
  for (const auto& s : samples) {
    std::vector<std::size_t> counts(bins, 0);
    for (double v : s) {
      auto bin = static_cast<std::size_t>((v - lo) / width);
      counts[std::min(bin, bins - 1)] += 1;
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

}  // namespace dwnet
