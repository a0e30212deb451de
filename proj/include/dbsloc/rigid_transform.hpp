#pragma once

#include <Eigen/Geometry>

#include "dbsloc/volume.hpp"

namespace dbsloc {

/// Rotation about `pivot` followed by a translation, all in voxel units:
///   x' = R(axis, angle) (x - pivot) + pivot + translation
struct RigidTransform {
  Point3 axis{0.0, 0.0, 1.0};
  double angle_deg = 0.0;
  Point3 translation{0.0, 0.0, 0.0};
  Point3 pivot{0.0, 0.0, 0.0};

  static RigidTransform identity() { return {}; }
  static RigidTransform translate(const Point3& t) {
    RigidTransform tf;
    tf.translation = t;
    return tf;
  }

  Eigen::Matrix3d rotation() const;
  Point3 map(const Point3& p) const;

  /// Copy with the pivot at the grid center ((dims - 1) / 2).
  RigidTransform centered_on(const Index3& dims) const;
};

/// Throws InvalidArgument if the axis is not a unit vector within 1e-9.
void validate(const RigidTransform& tf);

RigidTransform rigid_invert(const RigidTransform& tf);

/// out(q) = v(tf^-1(q)): content moves forward along the coordinate map.
Volume3 rigid_apply(const RigidTransform& tf, const Volume3& v, Interpolation interp);

}  // namespace dbsloc
