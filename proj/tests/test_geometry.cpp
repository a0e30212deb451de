#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dbsloc/errors.hpp"
#include "dbsloc/heatmap.hpp"
#include "dbsloc/intensity_curve.hpp"
#include "dbsloc/rigid_transform.hpp"
#include "dbsloc/transform_sampling.hpp"

using namespace dbsloc;

namespace {

Volume3 blob(int n, double sigma) {
  Volume3 v({n, n, n}, {1, 1, 1});
  const double c = (n - 1) / 2.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double r2 = (i - c) * (i - c) + (j - c) * (j - c) + (k - c) * (k - c);
        v(i, j, k) = 0.2 + 0.6 * std::exp(-r2 / (2 * sigma * sigma));
      }
  return v;
}

}  // namespace

TEST(Bezier, IdentityControlPoints) {
  const IntensityCurve c(Point2(1.0 / 3, 1.0 / 3), Point2(2.0 / 3, 2.0 / 3));
  for (double t = 0.0; t <= 1.0; t += 0.0625) {
    const Point2 p = bezier_eval(c, t);
    EXPECT_NEAR(p.x(), t, 1e-12);
    EXPECT_NEAR(p.y(), t, 1e-12);
  }
}

TEST(Bezier, EndPointsFixed) {
  const IntensityCurve c(Point2(0.9, 0.1), Point2(0.2, 0.7));
  EXPECT_EQ(c.eval(0.0), Point2(0, 0));
  EXPECT_EQ(c.eval(1.0), Point2(1, 1));
  EXPECT_THROW(c.eval(1.5), InvalidArgument);
}

TEST(Bezier, HandEvaluatedPoint) {
  const IntensityCurve c(Point2(0, 1), Point2(0, 1));
  const Point2 p = c.eval(0.5);
  EXPECT_NEAR(p.x(), 0.125, 1e-15);
  EXPECT_NEAR(p.y(), 0.875, 1e-15);
  EXPECT_NEAR(c.apply(0.125), 0.875, 2e-3);
}

TEST(Bezier, RejectsControlPointsOutsideUnitSquare) {
  EXPECT_THROW(IntensityCurve(Point2(-0.1, 0.5), Point2(0.5, 0.5)), InvalidArgument);
  EXPECT_THROW(IntensityCurve(Point2(0.5, 0.5), Point2(0.5, 1.1)), InvalidArgument);
}

TEST(IntensityApply, IdentityCurveLeavesVolume) {
  const Volume3 v = blob(12, 3.0);
  const Volume3 out = intensity_apply(IntensityCurve::identity(), v);
  for (std::size_t n = 0; n < v.size(); ++n) EXPECT_NEAR(out.data()[n], v.data()[n], 1e-9);
}

TEST(IntensityApply, ForwardThenInverse) {
  const Volume3 v = blob(16, 4.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const IntensityCurve c = sample_transform(TransformPriors{}, seed).intensity;
    const Volume3 back = intensity_apply_inverse(c, intensity_apply(c, v));
    double worst = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) worst = std::max(worst, std::abs(back.data()[n] - v.data()[n]));
    EXPECT_LE(worst, 2e-3) << "seed " << seed;
  }
}

TEST(IntensityApply, CountsClampedValues) {
  Volume3 v({4, 1, 1}, {1, 1, 1}, std::vector<double>{-0.5, 0.2, 0.9, 1.7});
  std::size_t clamped = 0;
  const Volume3 out = intensity_apply(IntensityCurve::identity(), v, &clamped);
  EXPECT_EQ(clamped, 2u);
  EXPECT_EQ(out.data()[0], 0.0);
  EXPECT_EQ(out.data()[3], 1.0);
}

TEST(Rigid, IdentityLeavesVolume) {
  const Volume3 v = blob(10, 2.0);
  EXPECT_EQ(rigid_apply(RigidTransform::identity(), v, Interpolation::Nearest), v);
  const Volume3 t = rigid_apply(RigidTransform::identity(), v, Interpolation::Trilinear);
  for (std::size_t n = 0; n < v.size(); ++n) EXPECT_NEAR(t.data()[n], v.data()[n], 1e-12);
}

TEST(Rigid, TranslationMovesVoxel) {
  Volume3 v({48, 48, 48}, {1, 1, 1});
  v(20, 20, 20) = 1.0;
  const Volume3 out = rigid_apply(RigidTransform::translate(Point3(10, 0, 0)), v, Interpolation::Nearest);
  EXPECT_EQ(out(30, 20, 20), 1.0);
  EXPECT_EQ(out(20, 20, 20), 0.0);
}

TEST(Rigid, QuarterTurnAboutZ) {
  Volume3 v({31, 31, 31}, {1, 1, 1});
  v(20, 15, 15) = 1.0;  // pivot (15,15,15) + (5,0,0)
  RigidTransform tf = RigidTransform::identity().centered_on(v.dims());
  tf.angle_deg = 90.0;
  const Volume3 out = rigid_apply(tf, v, Interpolation::Nearest);
  // Rz(90) (5,0,0) = (0,5,0)
  EXPECT_EQ(argmax_position(out), (Index3{15, 20, 15}));
  EXPECT_EQ(out(15, 20, 15), 1.0);
}

TEST(Rigid, InverseAlgebra) {
  const RigidTransform id = rigid_invert(RigidTransform::identity());
  EXPECT_EQ(id.angle_deg, 0.0);
  EXPECT_TRUE(id.translation.isZero(0.0));

  const RigidTransform inv = rigid_invert(RigidTransform::translate(Point3(1, -2, 3)));
  EXPECT_EQ(inv.translation, Point3(-1, 2, -3));

  RigidTransform r;
  r.axis = Point3(0, 1, 0);
  r.angle_deg = 17.0;
  EXPECT_EQ(rigid_invert(r).angle_deg, -17.0);
}

TEST(Rigid, CoordinateRoundTrip) {
  const TransformPair pair = sample_transform(TransformPriors{}, 99, Point3(31.5, 31.5, 31.5));
  const RigidTransform inv = rigid_invert(pair.spatial);
  double worst = 0.0;
  for (int k = 0; k < 64; ++k)
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) {
        const Point3 p(i, j, k);
        worst = std::max(worst, (inv.map(pair.spatial.map(p)) - p).norm());
      }
  EXPECT_LE(worst, 1e-9);
}

TEST(Rigid, RejectsNonUnitAxis) {
  RigidTransform tf;
  tf.axis = Point3(0, 0, 2);
  EXPECT_THROW(validate(tf), InvalidArgument);
}

TEST(TransformSampling, Deterministic) {
  const TransformPair a = sample_transform(TransformPriors{}, 5);
  const TransformPair b = sample_transform(TransformPriors{}, 5);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_NE(to_json(a), to_json(sample_transform(TransformPriors{}, 6)));
}

TEST(TransformSampling, RangesAndMonotoneCurves) {
  Point3 lo = Point3::Constant(1e9), hi = Point3::Constant(-1e9);
  int non_monotone = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const TransformPair p = sample_transform(TransformPriors{}, seed);
    lo = lo.cwiseMin(p.spatial.translation);
    hi = hi.cwiseMax(p.spatial.translation);
    ASSERT_LE(std::abs(p.spatial.angle_deg), 20.0);
    ASSERT_NEAR(p.spatial.axis.norm(), 1.0, 1e-12);
    const auto& xs = p.intensity.lut_x();
    const auto& ys = p.intensity.lut_y();
    for (std::size_t n = 1; n < xs.size(); ++n) non_monotone += (xs[n] <= xs[n - 1]) || (ys[n] < ys[n - 1]);
  }
  EXPECT_EQ(non_monotone, 0);
  for (int a = 0; a < 3; ++a) {
    EXPECT_GE(lo[a], -10.0);
    EXPECT_LE(lo[a], -9.0);
    EXPECT_GE(hi[a], 9.0);
    EXPECT_LE(hi[a], 10.0);
  }
}

TEST(TransformSampling, DefaultPriors) {
  const TransformPriors p;
  EXPECT_EQ(p.translation.lo, -10.0);
  EXPECT_EQ(p.translation.hi, 10.0);
  EXPECT_EQ(p.rotation_deg.lo, -20.0);
  EXPECT_EQ(p.rotation_deg.hi, 20.0);
  EXPECT_EQ(p.curve_control.lo, 0.0);
  EXPECT_EQ(p.curve_control.hi, 1.0);
}

TEST(TransformSampling, IdentityPriors) {
  const TransformPair p = sample_transform(TransformPriors::identity(), 3);
  EXPECT_EQ(p.spatial.angle_deg, 0.0);
  EXPECT_TRUE(p.spatial.translation.isZero(0.0));
  EXPECT_EQ(p.intensity.apply(0.37), IntensityCurve::identity().apply(0.37));
}

TEST(TransformJson, RoundTrip) {
  const TransformPair a = sample_transform(TransformPriors{}, 42);
  const nlohmann::json j = to_json(a);
  for (const char* key : {"axis", "angle_deg", "translation", "curve"}) EXPECT_TRUE(j.contains(key)) << key;
  const TransformPair b = transform_pair_from_json(j);
  EXPECT_EQ(to_json(b), j);
  EXPECT_THROW(transform_pair_from_json(nlohmann::json{{"axis", {0, 0, 1}}}), InvalidArgument);
}

TEST(TransformJson, PriorsRoundTrip) {
  TransformPriors p;
  p.translation = {-3, 4};
  p.sample_curve = false;
  const TransformPriors q = priors_from_json(to_json(p));
  EXPECT_EQ(to_json(q), to_json(p));
  EXPECT_THROW(priors_from_json(nlohmann::json{{"curve_control", {0.0, 2.0}}}), InvalidArgument);
}

TEST(Rigid, SmoothVolumeRoundTripInsideFieldOfView) {
  const Volume3 v = blob(48, 9.0);
  const TransformPair pair = sample_transform(TransformPriors{}, 7, Point3(23.5, 23.5, 23.5));
  const RigidTransform inv = rigid_invert(pair.spatial);
  const Volume3 back = rigid_apply(inv, rigid_apply(pair.spatial, v, Interpolation::Trilinear), Interpolation::Trilinear);
  double worst = 0.0;
  for (int k = 1; k < 47; ++k)
    for (int j = 1; j < 47; ++j)
      for (int i = 1; i < 47; ++i) {
        const Point3 mid = pair.spatial.map(Point3(i, j, k));
        if ((mid.array() < 1.0).any() || (mid.array() > 46.0).any()) continue;
        worst = std::max(worst, std::abs(back(i, j, k) - v(i, j, k)));
      }
  EXPECT_LE(worst, 0.05);
}
