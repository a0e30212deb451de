#pragma once

#include <string_view>

#include "dbsloc/volume.hpp"

namespace dbsloc {

/// Truncated isotropic Gaussian target map; sigma in millimetres.
struct HeatmapSpec {
  double sigma = 1.5;
  double cutoff = 0.05;
  double peak = 1.0;

  /// Distance (mm) beyond which values fall under the cutoff.
  double support_radius() const;
};

void validate(const HeatmapSpec& spec);

enum class Side { Left, Right };

std::string_view to_string(Side side);

struct TargetPoint {
  Point3 position = Point3::Zero();  // voxel coordinates
  Side side = Side::Right;
};

/// value(v) = peak * exp(-|v - c|^2_mm / (2 sigma^2)), zeroed below the cutoff.
Volume3 gaussian_heatmap(const HeatmapSpec& spec, const Point3& center, const Index3& dims, const Spacing3& spacing);

/// Index of the largest value; ties go to the smallest x-fastest linear
/// index and NaN voxels are skipped. Throws InvalidData if every voxel is NaN.
Index3 argmax_position(const Volume3& h);

Point3 to_point(const Index3& p);
Index3 round_to_voxel(const Point3& p);

struct LossAndGradient {
  double loss = 0.0;
  Volume3 grad;
};

/// Weighted MSE: weight fg_weight where gt > 0, else 1.
LossAndGradient wmse(const Volume3& pred, const Volume3& gt, double fg_weight = 100.0);

/// 2|a∩b| / (|a|+|b|) on binary masks, 1 when both are empty.
double dice_score(const Volume3& a, const Volume3& b);

/// Soft Dice loss 1 - 2Σpg / (Σp + Σg) with its gradient in `pred`.
LossAndGradient soft_dice_loss(const Volume3& pred, const Volume3& gt);

}  // namespace dbsloc
