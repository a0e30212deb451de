#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "dbsloc/volume.hpp"

namespace dbsloc {

using Point2 = Eigen::Vector2d;

/// Monotone cubic Bezier intensity map with fixed end points (0,0) and (1,1).
/// The parametric curve is tabulated at `samples` uniform parameter values;
/// forward and inverse maps are piecewise-linear reads of that table.
class IntensityCurve {
 public:
  static constexpr std::size_t kDefaultSamples = 1000;

  /// Control points outside [0,1]^2 are rejected. P1 and P2 are swapped when
  /// p1.x > p2.x.
  IntensityCurve(Point2 p1, Point2 p2, std::size_t samples = kDefaultSamples);

  static IntensityCurve identity(std::size_t samples = kDefaultSamples);

  Point2 p0() const { return {0.0, 0.0}; }
  const Point2& p1() const { return p1_; }
  const Point2& p2() const { return p2_; }
  Point2 p3() const { return {1.0, 1.0}; }

  /// Exact Bernstein combination; throws InvalidArgument for t outside [0,1].
  Point2 eval(double t) const;

  /// Input clamped to [0,1].
  double apply(double u) const;
  double apply_inverse(double y) const;

  const std::vector<double>& lut_x() const { return xs_; }
  const std::vector<double>& lut_y() const { return ys_; }

 private:
  Point2 p1_;
  Point2 p2_;
  std::vector<double> xs_, ys_;          // forward table, xs_ strictly increasing
  std::vector<double> inv_y_, inv_x_;    // inverse table, inv_y_ strictly increasing
};

Point2 bezier_eval(const IntensityCurve& curve, double t);

/// Values outside [0,1] are clamped first; the number clamped is added to
/// `*clamped_count` when given.
Volume3 intensity_apply(const IntensityCurve& curve, const Volume3& v, std::size_t* clamped_count = nullptr);
Volume3 intensity_apply_inverse(const IntensityCurve& curve, const Volume3& v,
                                std::size_t* clamped_count = nullptr);

}  // namespace dbsloc
