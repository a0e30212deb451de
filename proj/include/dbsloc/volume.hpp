#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dbsloc {

using Index3 = std::array<int, 3>;
using Spacing3 = std::array<double, 3>;
using Point3 = Eigen::Vector3d;

/// Axis 0 runs from anatomical left to right. It is the only convention the
/// toolkit supports; the tag exists so file headers can state it.
enum class AxisConvention { LeftToRight };

enum class Interpolation { Trilinear, Nearest };

/// Dense 3D scalar grid. Voxel (i,j,k) has its physical center at
/// (i*spacing[0], j*spacing[1], k*spacing[2]) mm; data is x-fastest.
class Volume3 {
 public:
  Volume3() = default;
  Volume3(Index3 dims, Spacing3 spacing, double fill = 0.0);
  Volume3(Index3 dims, Spacing3 spacing, std::vector<double> data);

  const Index3& dims() const noexcept { return dims_; }
  const Spacing3& spacing() const noexcept { return spacing_; }
  AxisConvention axis_convention() const noexcept { return AxisConvention::LeftToRight; }

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  std::size_t linear_index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
  }
  std::size_t linear_index(const Index3& p) const noexcept { return linear_index(p[0], p[1], p[2]); }
  Index3 voxel_of(std::size_t linear) const noexcept;

  bool contains(const Index3& p) const noexcept {
    return p[0] >= 0 && p[1] >= 0 && p[2] >= 0 && p[0] < dims_[0] && p[1] < dims_[1] && p[2] < dims_[2];
  }

  double operator()(int i, int j, int k) const noexcept { return data_[linear_index(i, j, k)]; }
  double& operator()(int i, int j, int k) noexcept { return data_[linear_index(i, j, k)]; }
  double operator[](const Index3& p) const noexcept { return data_[linear_index(p)]; }
  double& operator[](const Index3& p) noexcept { return data_[linear_index(p)]; }

  /// Same grid, fresh contents.
  Volume3 like(double fill = 0.0) const { return Volume3(dims_, spacing_, fill); }

  friend bool operator==(const Volume3&, const Volume3&) = default;

 private:
  Index3 dims_{0, 0, 0};
  Spacing3 spacing_{1.0, 1.0, 1.0};
  std::vector<double> data_;
};

/// Crop window: `center` is a voxel index, `extent` the output size.
struct VoxelBox {
  Index3 center{0, 0, 0};
  Index3 extent{1, 1, 1};

  /// Input voxel that lands at output index 0.
  Index3 offset() const noexcept {
    return {center[0] - extent[0] / 2, center[1] - extent[1] / 2, center[2] - extent[2] / 2};
  }
};

/// Trilinear read at a continuous voxel coordinate; coordinates outside the
/// grid are clamped to the nearest edge.
double sample_trilinear(const Volume3& v, const Point3& voxel_coord) noexcept;
/// Nearest-voxel read with the same clamping rule.
double sample_nearest(const Volume3& v, const Point3& voxel_coord) noexcept;
double sample(const Volume3& v, const Point3& voxel_coord, Interpolation interp) noexcept;

Volume3 resample_isotropic(const Volume3& v, double target_spacing,
                           Interpolation interp = Interpolation::Trilinear);

/// Affine map onto [0,1]; constant volumes become all zeros.
Volume3 rescale_intensity(const Volume3& v);

/// Resample onto exactly `dims`, keeping the physical span between the first
/// and last voxel centers. Coordinates map between grids by pure scaling.
Volume3 resample_to_dims(const Volume3& v, const Index3& dims, Interpolation interp);
Volume3 downsample_to(const Volume3& v, const Index3& dims);

Volume3 crop_box(const Volume3& v, const VoxelBox& box, double pad_value = 0.0);

/// Reflect along axis 0 (left-right).
Volume3 flip_lr(const Volume3& v);

Index3 flip_lr_index(const Index3& p, const Index3& dims) noexcept;

}  // namespace dbsloc
