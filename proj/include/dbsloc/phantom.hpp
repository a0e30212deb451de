#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dbsloc/heatmap.hpp"
#include "dbsloc/volume.hpp"

namespace dbsloc {

struct EllipsoidSpec {
  Point3 center_mm = Point3::Zero();
  Point3 semi_axes_mm = Point3::Ones();
  double intensity = 0.0;
};

/// Synthetic head: a soft-edged head ellipsoid, a dark midline ventricle and
/// two thalami, each carrying a brighter Gaussian nucleus centered on its
/// target. Positions are millimetres from voxel (0,0,0).
struct PhantomSpec {
  Index3 dims{192, 192, 192};
  double spacing_mm = 1.0;

  EllipsoidSpec head{{95.5, 95.5, 95.5}, {80.0, 90.0, 80.0}, 0.30};
  EllipsoidSpec ventricle{{95.5, 100.0, 92.0}, {5.0, 18.0, 10.0}, 0.08};
  EllipsoidSpec left_thalamus{{69.0, 100.0, 90.0}, {11.0, 15.0, 12.0}, 0.65};
  EllipsoidSpec right_thalamus{{122.0, 100.0, 90.0}, {11.0, 15.0, 12.0}, 0.65};

  /// Target offset from each thalamus center in units of its semi-axes.
  /// Component 0 points medially (towards the midline) on both sides.
  Point3 target_fraction{0.25, 0.45, 0.35};
  double nucleus_sigma_mm = 2.0;
  double nucleus_boost = 0.35;
  double edge_width_mm = 0.75;

  /// Lateral push (mm) applied to everything further than
  /// `displacement_ramp_mm` from the midline; the ventricle widens to match.
  double ventricle_enlargement = 0.0;
  double displacement_ramp_mm = 12.0;

  double noise_std = 0.0;
  double bias_field_amplitude = 0.0;
  int crop_extent = 64;  // both crops around the thalami must fit inside dims
  std::uint64_t seed = 0;
};

struct PhantomCase {
  Volume3 image;       // rescaled to [0,1]
  Volume3 left_mask;   // binary
  Volume3 right_mask;  // binary
  std::array<TargetPoint, 2> targets;  // [left, right], voxel coordinates
  PhantomSpec spec;

  const TargetPoint& target(Side s) const { return targets[s == Side::Left ? 0 : 1]; }
  const Volume3& mask(Side s) const { return s == Side::Left ? left_mask : right_mask; }
};

/// Deterministic in the spec. Throws SpecInfeasible for overlapping thalami,
/// targets outside their masks or crops that would not fit inside dims.
PhantomCase generate_phantom(const PhantomSpec& spec);

/// Lateral displacement (mm, signed along axis 0) at physical x.
double lateral_displacement(const PhantomSpec& spec, double x_mm);

struct CohortMix {
  int hard_count = 0;         // large ventricle enlargement + high noise
  int injected_failures = 0;  // one side per case gets a failing localizer
};

struct CohortEntry {
  int id = 0;
  bool hard = false;
  std::optional<Side> injected_failure;
  PhantomSpec spec;
};

/// Case i depends only on (seed, i) and on whether it was drawn hard; the
/// hard and failure subsets are the lowest-ranked ids under two hash streams.
std::vector<CohortEntry> plan_cohort(int n, const CohortMix& mix, std::uint64_t seed,
                                     const PhantomSpec& base = PhantomSpec{});

struct CohortCase {
  CohortEntry entry;
  PhantomCase phantom;
};

std::vector<CohortCase> generate_cohort(int n, const CohortMix& mix, std::uint64_t seed,
                                        const PhantomSpec& base = PhantomSpec{});

nlohmann::json to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

}  // namespace dbsloc
