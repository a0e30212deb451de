#include "dbsloc/rigid_transform.hpp"

#include <cmath>
#include <numbers>

#include "dbsloc/errors.hpp"

namespace dbsloc {

Eigen::Matrix3d RigidTransform::rotation() const {
  return Eigen::AngleAxisd(angle_deg * std::numbers::pi / 180.0, axis).toRotationMatrix();
}

Point3 RigidTransform::map(const Point3& p) const { return rotation() * (p - pivot) + pivot + translation; }

RigidTransform RigidTransform::centered_on(const Index3& dims) const {
  RigidTransform tf = *this;
  tf.pivot = Point3((dims[0] - 1) / 2.0, (dims[1] - 1) / 2.0, (dims[2] - 1) / 2.0);
  return tf;
}

void validate(const RigidTransform& tf) {
  if (std::abs(tf.axis.norm() - 1.0) > 1e-9) throw InvalidArgument("rotation axis must be a unit vector");
  if (!std::isfinite(tf.angle_deg) || !tf.translation.allFinite() || !tf.pivot.allFinite()) {
    throw InvalidArgument("rigid transform has non-finite parameters");
  }
}

RigidTransform rigid_invert(const RigidTransform& tf) {
  // x = R^-1 (y - pivot - t) + pivot = R^-1 (y - pivot) + pivot - R^-1 t
  RigidTransform inv;
  inv.axis = tf.axis;
  inv.angle_deg = -tf.angle_deg;
  inv.pivot = tf.pivot;
  inv.translation = -(tf.rotation().transpose() * tf.translation);
  return inv;
}

Volume3 rigid_apply(const RigidTransform& tf, const Volume3& v, Interpolation interp) {
  validate(tf);
  // Source coordinate for output voxel q: R^T (q - pivot - t) + pivot.
  const Eigen::Matrix3d rt = tf.rotation().transpose();
  const Point3 base = rt * (-tf.pivot - tf.translation) + tf.pivot;
  const Point3 dx = rt.col(0);
  const Point3 dy = rt.col(1);
  const Point3 dz = rt.col(2);

  Volume3 out = v.like();
  const Index3& d = v.dims();
  auto dst = out.data();
  std::size_t n = 0;
  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      const Point3 row = base + j * dy + k * dz;
      for (int i = 0; i < d[0]; ++i, ++n) dst[n] = sample(v, row + i * dx, interp);
    }
  }
  return out;
}

}  // namespace dbsloc
