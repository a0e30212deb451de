#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "dbsloc/errors.hpp"
#include "dbsloc/phantom.hpp"

using namespace dbsloc;

namespace {

const PhantomCase& default_phantom() {
  static const PhantomCase pc = generate_phantom(PhantomSpec{});
  return pc;
}

Point3 mask_centroid(const Volume3& m) {
  Point3 sum = Point3::Zero();
  double n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.data()[i] > 0.5) {
      sum += to_point(m.voxel_of(i));
      n += 1;
    }
  }
  return sum / n;
}

}  // namespace

TEST(Phantom, DefaultsAreAnalytic) {
  const PhantomCase& pc = default_phantom();
  double lo = 1e9, hi = -1e9;
  for (double x : pc.image.data()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  EXPECT_EQ(hi, 1.0);
  EXPECT_EQ(lo, 0.0);
  // Thalamus center + target fraction of the semi-axes, medial on axis 0, rounded.
  EXPECT_EQ(pc.target(Side::Left).position, Point3(72, 107, 94));
  EXPECT_EQ(pc.target(Side::Right).position, Point3(119, 107, 94));

  const EllipsoidSpec& e = pc.spec.left_thalamus;
  for (int k = 70; k < 112; k += 3)
    for (int j = 80; j < 120; j += 2)
      for (int i = 50; i < 90; ++i) {
        const bool inside = (Point3(i, j, k) - e.center_mm).cwiseQuotient(e.semi_axes_mm).norm() <= 1.0;
        ASSERT_EQ(pc.left_mask(i, j, k) == 1.0, inside) << i << "," << j << "," << k;
      }
  for (double x : pc.left_mask.data()) ASSERT_TRUE(x == 0.0 || x == 1.0);
}

TEST(Phantom, TargetsInsideMasks) {
  const PhantomCase& pc = default_phantom();
  for (Side s : {Side::Left, Side::Right}) EXPECT_EQ(pc.mask(s)[round_to_voxel(pc.target(s).position)], 1.0);
}

TEST(Phantom, Deterministic) {
  PhantomSpec spec;
  spec.dims = {160, 160, 160};
  spec.noise_std = 0.05;
  spec.bias_field_amplitude = 0.2;
  spec.seed = 77;
  const PhantomCase a = generate_phantom(spec);
  const PhantomCase b = generate_phantom(spec);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.left_mask, b.left_mask);
  spec.seed = 78;
  EXPECT_NE(generate_phantom(spec).image, a.image);
}

TEST(Phantom, EnlargementShiftsThalamiLaterally) {
  PhantomSpec spec;
  spec.ventricle_enlargement = 8.0;
  const PhantomCase shifted = generate_phantom(spec);
  const PhantomCase& base = default_phantom();
  const double dl = mask_centroid(shifted.left_mask).x() - mask_centroid(base.left_mask).x();
  const double dr = mask_centroid(shifted.right_mask).x() - mask_centroid(base.right_mask).x();
  EXPECT_NEAR(dl, -8.0, 1.0);
  EXPECT_NEAR(dr, 8.0, 1.0);
  EXPECT_NEAR(shifted.target(Side::Right).position.x() - base.target(Side::Right).position.x(), 8.0, 1.0);
  for (Side s : {Side::Left, Side::Right}) EXPECT_EQ(shifted.mask(s)[round_to_voxel(shifted.target(s).position)], 1.0);
}

TEST(Phantom, DisplacementIsOddAndSaturates) {
  PhantomSpec spec;
  spec.ventricle_enlargement = 5.0;
  const double mid = 95.5;
  EXPECT_DOUBLE_EQ(lateral_displacement(spec, mid + 3), -lateral_displacement(spec, mid - 3));
  EXPECT_DOUBLE_EQ(lateral_displacement(spec, mid + 40), 5.0);
  EXPECT_DOUBLE_EQ(lateral_displacement(spec, mid), 0.0);
}

TEST(Phantom, InfeasibleSpecs) {
  PhantomSpec overlap;
  overlap.right_thalamus.center_mm = overlap.left_thalamus.center_mm + Point3(5, 0, 0);
  EXPECT_THROW(generate_phantom(overlap), SpecInfeasible);

  PhantomSpec tiny;
  tiny.dims = {100, 192, 192};
  EXPECT_THROW(generate_phantom(tiny), SpecInfeasible);

  PhantomSpec bad;
  bad.noise_std = -1;
  EXPECT_THROW(generate_phantom(bad), InvalidArgument);
}

TEST(CohortPlan, HardCasesAndFailuresCounted) {
  const std::vector<CohortEntry> plan = plan_cohort(30, {5, 3}, 9);
  ASSERT_EQ(plan.size(), 30u);
  int hard = 0, failing = 0;
  for (const CohortEntry& e : plan) {
    hard += e.hard;
    failing += e.injected_failure.has_value();
    if (e.hard) {
      EXPECT_GE(e.spec.ventricle_enlargement, 6.0);
      EXPECT_GE(e.spec.noise_std, 0.05);
    }
  }
  EXPECT_EQ(hard, 5);
  EXPECT_EQ(failing, 3);
}

TEST(CohortPlan, CaseDependsOnlyOnSeedAndIndex) {
  const std::vector<CohortEntry> small = plan_cohort(5, {}, 4);
  const std::vector<CohortEntry> large = plan_cohort(12, {}, 4);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(to_json(small[i].spec), to_json(large[i].spec));
  EXPECT_THROW(plan_cohort(0, {}, 1), InvalidArgument);
}

TEST(CohortPlan, DistinctSeedsDistinctImages) {
  PhantomSpec base;
  base.noise_std = 0.01;
  const std::vector<CohortCase> a = generate_cohort(2, {}, 1, base);
  const std::vector<CohortCase> b = generate_cohort(1, {}, 2, base);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NE(a[0].phantom.image, a[1].phantom.image);
  EXPECT_NE(a[0].phantom.image, b[0].phantom.image);
}

TEST(CohortPlan, SpecJsonRoundTrip) {
  const std::vector<CohortEntry> plan = plan_cohort(3, {1, 1}, 5);
  for (const CohortEntry& e : plan) EXPECT_EQ(to_json(phantom_spec_from_json(to_json(e.spec))), to_json(e.spec));
}
