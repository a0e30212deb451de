#include "dbsloc/mc_statistics.hpp"

#include <algorithm>
#include <cmath>

#include "dbsloc/errors.hpp"

namespace dbsloc {

void MomentAccumulator::add(const Volume3& sample) {
  if (count_ == 0) {
    mean_ = sample.like();
    m2_ = sample.like();
  } else if (sample.dims() != mean_.dims()) {
    throw InvalidArgument("Monte Carlo samples must share dims");
  }
  ++count_;
  const double inv_n = 1.0 / static_cast<double>(count_);
  auto y = sample.data();
  auto mean = mean_.data();
  auto m2 = m2_.data();
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double delta = y[n] - mean[n];
    mean[n] += delta * inv_n;
    m2[n] += delta * (y[n] - mean[n]);
  }
}

Volume3 MomentAccumulator::mean() const { return mean_; }

Volume3 MomentAccumulator::variance() const {
  Volume3 out = m2_;
  if (count_ == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(count_);
  for (double& v : out.data()) v = std::max(0.0, v * inv_n);
  return out;
}

MeanVariance mean_variance(std::span<const Volume3> samples) {
  if (samples.size() < 2) throw InvalidArgument("mean_variance needs at least two samples");
  MomentAccumulator acc;
  for (const Volume3& s : samples) acc.add(s);
  return {acc.mean(), acc.variance()};
}

Point3 centroid(std::span<const Point3> positions) {
  if (positions.empty()) throw InvalidArgument("centroid of an empty position set");
  Point3 sum = Point3::Zero();
  for (const Point3& p : positions) sum += p;
  return sum / static_cast<double>(positions.size());
}

double mad(std::span<const Point3> positions) {
  if (positions.empty()) throw InvalidArgument("mad of an empty position set");
  const Point3 c = centroid(positions);
  double sum = 0.0;
  for (const Point3& p : positions) sum += (p - c).norm();
  return sum / static_cast<double>(positions.size());
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty set");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotStats rejection_stats(std::span<const double> values) {
  if (values.size() < 4) throw InvalidArgument("rejection_stats needs at least 4 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  BoxplotStats s;
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.iqr = s.q3 - s.q1;
  s.upper_fence = s.q3 + 1.5 * s.iqr;
  s.upper_whisker = sorted.front();
  for (double v : sorted)
    if (v <= s.upper_fence) s.upper_whisker = v;
  for (std::size_t n = 0; n < values.size(); ++n)
    if (values[n] > s.upper_fence) s.flagged.push_back(n);
  return s;
}

}  // namespace dbsloc
