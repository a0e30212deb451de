#include "dbsloc/intensity_curve.hpp"

#include <algorithm>
#include <numeric>

#include "dbsloc/errors.hpp"

namespace dbsloc {

namespace {

bool in_unit_square(const Point2& p) { return p.x() >= 0.0 && p.x() <= 1.0 && p.y() >= 0.0 && p.y() <= 1.0; }

Point2 bernstein(const Point2& p1, const Point2& p2, double t) {
  const double s = 1.0 - t;
  // P0 = (0,0) contributes nothing.
  return 3.0 * s * s * t * p1 + 3.0 * s * t * t * p2 + t * t * t * Point2(1.0, 1.0);
}

/// Keeps only strictly increasing keys. The first entry (0,0) is always
/// kept and the final entry is pinned to (1,1).
void make_strict(std::vector<double>& keys, std::vector<double>& values) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  std::vector<double> k_out{0.0}, v_out{0.0};
  for (std::size_t idx : order) {
    const double k = std::clamp(keys[idx], 0.0, 1.0);
    const double val = std::clamp(values[idx], 0.0, 1.0);
    if (k > k_out.back()) {
      k_out.push_back(k);
      v_out.push_back(std::max(val, v_out.back()));
    } else {
      v_out.back() = std::max(v_out.back(), k_out.size() == 1 ? 0.0 : val);
    }
  }
  if (k_out.back() < 1.0) {
    k_out.push_back(1.0);
    v_out.push_back(1.0);
  } else {
    v_out.back() = 1.0;
  }
  keys = std::move(k_out);
  values = std::move(v_out);
}

double lut_read(const std::vector<double>& keys, const std::vector<double>& values, double u) {
  if (u <= keys.front()) return values.front();
  if (u >= keys.back()) return values.back();
  const auto it = std::upper_bound(keys.begin(), keys.end(), u);
  const std::size_t hi = static_cast<std::size_t>(it - keys.begin());
  const std::size_t lo = hi - 1;
  const double f = (u - keys[lo]) / (keys[hi] - keys[lo]);
  return values[lo] + f * (values[hi] - values[lo]);
}

Volume3 map_voxels(const Volume3& v, std::size_t* clamped_count, auto&& fn) {
  Volume3 out = v.like();
  auto src = v.data();
  auto dst = out.data();
  std::size_t clamped = 0;
  for (std::size_t n = 0; n < src.size(); ++n) {
    double u = src[n];
    if (u < 0.0 || u > 1.0) {
      ++clamped;
      u = std::clamp(u, 0.0, 1.0);
    }
    dst[n] = fn(u);
  }
  if (clamped_count) *clamped_count += clamped;
  return out;
}

}  // namespace

IntensityCurve::IntensityCurve(Point2 p1, Point2 p2, std::size_t samples) : p1_(p1), p2_(p2) {
  if (!in_unit_square(p1_) || !in_unit_square(p2_)) throw InvalidArgument("control points must lie in [0,1]^2");
  if (samples < 2) throw InvalidArgument("intensity curve needs at least 2 samples");
  if (p1_.x() > p2_.x()) std::swap(p1_, p2_);

  xs_.resize(samples);
  ys_.resize(samples);
  for (std::size_t m = 0; m < samples; ++m) {
    const double t = static_cast<double>(m) / static_cast<double>(samples - 1);
    const Point2 b = bernstein(p1_, p2_, t);
    xs_[m] = b.x();
    ys_[m] = b.y();
  }
  make_strict(xs_, ys_);

  inv_y_ = ys_;
  inv_x_ = xs_;
  make_strict(inv_y_, inv_x_);
}

IntensityCurve IntensityCurve::identity(std::size_t samples) {
  return IntensityCurve(Point2(1.0 / 3.0, 1.0 / 3.0), Point2(2.0 / 3.0, 2.0 / 3.0), samples);
}

Point2 IntensityCurve::eval(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("Bezier parameter must lie in [0,1]");
  return bernstein(p1_, p2_, t);
}

double IntensityCurve::apply(double u) const { return lut_read(xs_, ys_, std::clamp(u, 0.0, 1.0)); }

double IntensityCurve::apply_inverse(double y) const { return lut_read(inv_y_, inv_x_, std::clamp(y, 0.0, 1.0)); }

Point2 bezier_eval(const IntensityCurve& curve, double t) { return curve.eval(t); }

Volume3 intensity_apply(const IntensityCurve& curve, const Volume3& v, std::size_t* clamped_count) {
  return map_voxels(v, clamped_count, [&](double u) { return curve.apply(u); });
}

Volume3 intensity_apply_inverse(const IntensityCurve& curve, const Volume3& v, std::size_t* clamped_count) {
  return map_voxels(v, clamped_count, [&](double u) { return curve.apply_inverse(u); });
}

}  // namespace dbsloc
