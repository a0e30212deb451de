#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbsloc/volume.hpp"

namespace dbsloc {

/// Running voxelwise mean and population variance (Welford). Samples must be
/// added in a fixed order for bitwise-reproducible results.
class MomentAccumulator {
 public:
  void add(const Volume3& sample);
  std::size_t count() const { return count_; }
  Volume3 mean() const;
  /// (1/N) Σ (y - mean)^2, clamped at 0.
  Volume3 variance() const;

 private:
  std::size_t count_ = 0;
  Volume3 mean_;
  Volume3 m2_;
};

struct MeanVariance {
  Volume3 mean;
  Volume3 variance;
};

/// Needs at least two samples on the same grid.
MeanVariance mean_variance(std::span<const Volume3> samples);

/// Maximum activation dispersion: mean distance of the positions from their
/// centroid. Throws InvalidArgument on an empty set.
double mad(std::span<const Point3> positions);
Point3 centroid(std::span<const Point3> positions);

struct BoxplotStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double upper_fence = 0.0;    // q3 + 1.5 iqr
  double upper_whisker = 0.0;  // largest datum <= upper_fence
  std::vector<std::size_t> flagged;  // indices with value > upper_fence
};

/// Linear-interpolation quantile (R type 7) of already sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Tukey upper-whisker analysis; needs at least 4 values.
BoxplotStats rejection_stats(std::span<const double> values);

}  // namespace dbsloc
