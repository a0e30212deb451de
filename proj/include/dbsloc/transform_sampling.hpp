#pragma once

#include <cstdint>
#include <utility>

#include <json.hpp>

#include "dbsloc/intensity_curve.hpp"
#include "dbsloc/rigid_transform.hpp"

namespace dbsloc {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform priors of the image acquisition model. Defaults: translation
/// U(-10,10) voxels per axis, rotation U(-20,20) degrees about a uniformly
/// random axis, Bezier control points U(0,1)^2.
struct TransformPriors {
  Range translation{-10.0, 10.0};
  Range rotation_deg{-20.0, 20.0};
  Range curve_control{0.0, 1.0};
  bool sample_curve = true;  // false: identity intensity map

  /// Zero spatial ranges and the identity curve.
  static TransformPriors identity();
};

void validate(const TransformPriors& priors);

struct TransformPair {
  RigidTransform spatial;
  IntensityCurve intensity = IntensityCurve::identity();
};

/// Deterministic in (priors, seed). The returned transform pivots on `pivot`.
TransformPair sample_transform(const TransformPriors& priors, std::uint64_t seed,
                               const Point3& pivot = Point3::Zero());

/// {axis:[3], angle_deg, translation:[3], curve:{p1:[2], p2:[2]}}
nlohmann::json to_json(const TransformPair& pair);
TransformPair transform_pair_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TransformPriors& priors);
TransformPriors priors_from_json(const nlohmann::json& j);

}  // namespace dbsloc
