#include "dbsloc/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dbsloc/errors.hpp"

namespace dbsloc {

namespace {

void check_grid(const Index3& dims, const Spacing3& spacing) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw InvalidArgument("volume dims must be >= 1 on every axis");
    if (!(spacing[a] > 0.0)) throw InvalidArgument("volume spacing must be > 0 on every axis");
  }
}

std::size_t voxel_count(const Index3& d) {
  return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]);
}

struct AxisStencil {
  int lo;
  int hi;
  double frac;
};

inline AxisStencil stencil(double c, int n) noexcept {
  if (!(c > 0.0)) return {0, 0, 0.0};
  const double last = static_cast<double>(n - 1);
  if (c >= last) return {n - 1, n - 1, 0.0};
  const int lo = static_cast<int>(c);
  return {lo, lo + 1, c - lo};
}

inline int nearest_index(double c, int n) noexcept {
  const double r = std::floor(c + 0.5);
  if (!(r > 0.0)) return 0;
  if (r >= n - 1) return n - 1;
  return static_cast<int>(r);
}

}  // namespace

Volume3::Volume3(Index3 dims, Spacing3 spacing, double fill) : dims_(dims), spacing_(spacing) {
  check_grid(dims_, spacing_);
  data_.assign(voxel_count(dims_), fill);
}

Volume3::Volume3(Index3 dims, Spacing3 spacing, std::vector<double> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_grid(dims_, spacing_);
  if (data_.size() != voxel_count(dims_)) {
    throw InvalidArgument("volume data length " + std::to_string(data_.size()) + " does not match dims");
  }
}

Index3 Volume3::voxel_of(std::size_t linear) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny), static_cast<int>(linear / (nx * ny))};
}

double sample_trilinear(const Volume3& v, const Point3& c) noexcept {
  const Index3& d = v.dims();
  const AxisStencil sx = stencil(c.x(), d[0]);
  const AxisStencil sy = stencil(c.y(), d[1]);
  const AxisStencil sz = stencil(c.z(), d[2]);

  const double c00 = (1.0 - sx.frac) * v(sx.lo, sy.lo, sz.lo) + sx.frac * v(sx.hi, sy.lo, sz.lo);
  const double c10 = (1.0 - sx.frac) * v(sx.lo, sy.hi, sz.lo) + sx.frac * v(sx.hi, sy.hi, sz.lo);
  const double c01 = (1.0 - sx.frac) * v(sx.lo, sy.lo, sz.hi) + sx.frac * v(sx.hi, sy.lo, sz.hi);
  const double c11 = (1.0 - sx.frac) * v(sx.lo, sy.hi, sz.hi) + sx.frac * v(sx.hi, sy.hi, sz.hi);
  const double c0 = (1.0 - sy.frac) * c00 + sy.frac * c10;
  const double c1 = (1.0 - sy.frac) * c01 + sy.frac * c11;
  return (1.0 - sz.frac) * c0 + sz.frac * c1;
}

double sample_nearest(const Volume3& v, const Point3& c) noexcept {
  const Index3& d = v.dims();
  return v(nearest_index(c.x(), d[0]), nearest_index(c.y(), d[1]), nearest_index(c.z(), d[2]));
}

double sample(const Volume3& v, const Point3& c, Interpolation interp) noexcept {
  return interp == Interpolation::Trilinear ? sample_trilinear(v, c) : sample_nearest(v, c);
}

Volume3 resample_isotropic(const Volume3& v, double target_spacing, Interpolation interp) {
  if (!(target_spacing > 0.0)) throw InvalidArgument("target spacing must be > 0");
  Index3 out_dims{};
  Point3 step;
  for (int a = 0; a < 3; ++a) {
    const double n = std::round(v.dims()[a] * v.spacing()[a] / target_spacing);
    out_dims[a] = std::max(1, static_cast<int>(n));
    step[a] = target_spacing / v.spacing()[a];
  }
  Volume3 out(out_dims, {target_spacing, target_spacing, target_spacing});
  for (int k = 0; k < out_dims[2]; ++k)
    for (int j = 0; j < out_dims[1]; ++j)
      for (int i = 0; i < out_dims[0]; ++i)
        out(i, j, k) = sample(v, Point3(i * step[0], j * step[1], k * step[2]), interp);
  return out;
}

Volume3 rescale_intensity(const Volume3& v) {
  Volume3 out = v.like();
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.data().begin(), v.data().end());
  const double mn = *lo;
  const double range = *hi - mn;
  if (!(range > 0.0)) return out;
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t n = 0; n < src.size(); ++n) dst[n] = (src[n] - mn) / range;
  return out;
}

Volume3 resample_to_dims(const Volume3& v, const Index3& dims, Interpolation interp) {
  for (int a = 0; a < 3; ++a)
    if (dims[a] < 1) throw InvalidArgument("target dims must be >= 1 on every axis");
  Spacing3 spacing{};
  Point3 scale;
  for (int a = 0; a < 3; ++a) {
    const int n_in = v.dims()[a];
    const int n_out = dims[a];
    if (n_out > 1 && n_in > 1) {
      scale[a] = static_cast<double>(n_in - 1) / (n_out - 1);
      spacing[a] = v.spacing()[a] * scale[a];
    } else {
      scale[a] = 0.0;
      spacing[a] = v.spacing()[a] * n_in / n_out;
    }
  }
  if (dims == v.dims()) return v;
  Volume3 out(dims, spacing);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        out(i, j, k) = sample(v, Point3(i * scale[0], j * scale[1], k * scale[2]), interp);
  return out;
}

Volume3 downsample_to(const Volume3& v, const Index3& dims) {
  return resample_to_dims(v, dims, Interpolation::Trilinear);
}

Volume3 crop_box(const Volume3& v, const VoxelBox& box, double pad_value) {
  for (int a = 0; a < 3; ++a)
    if (box.extent[a] < 1) throw InvalidArgument("crop extent must be >= 1 on every axis");
  Volume3 out(box.extent, v.spacing(), pad_value);
  const Index3 off = box.offset();
  for (int k = 0; k < box.extent[2]; ++k) {
    const int sk = off[2] + k;
    if (sk < 0 || sk >= v.dims()[2]) continue;
    for (int j = 0; j < box.extent[1]; ++j) {
      const int sj = off[1] + j;
      if (sj < 0 || sj >= v.dims()[1]) continue;
      const int i_begin = std::max(0, -off[0]);
      const int i_end = std::min(box.extent[0], v.dims()[0] - off[0]);
      for (int i = i_begin; i < i_end; ++i) out(i, j, k) = v(off[0] + i, sj, sk);
    }
  }
  return out;
}

Volume3 flip_lr(const Volume3& v) {
  Volume3 out = v.like();
  const int nx = v.dims()[0];
  for (int k = 0; k < v.dims()[2]; ++k)
    for (int j = 0; j < v.dims()[1]; ++j)
      for (int i = 0; i < nx; ++i) out(nx - 1 - i, j, k) = v(i, j, k);
  return out;
}

Index3 flip_lr_index(const Index3& p, const Index3& dims) noexcept {
  return {dims[0] - 1 - p[0], p[1], p[2]};
}

}  // namespace dbsloc
