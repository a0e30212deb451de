#pragma once

#include <array>
#include <memory>
#include <string>

#include <json.hpp>

#include "dbsloc/components.hpp"
#include "dbsloc/heatmap.hpp"
#include "dbsloc/predictors.hpp"

namespace dbsloc {

struct PipelineConfig {
  Index3 coarse_dims{80, 80, 80};
  Index3 crop_extent{64, 64, 64};
  Connectivity connectivity = Connectivity::TwentySix;
  double binarize_threshold = 0.5;
  HeatmapSpec heatmap;
  std::shared_ptr<const Segmenter> segmenter;
  std::shared_ptr<const Localizer> localizer;
};

void validate(const PipelineConfig& cfg);

/// Stage-1 outcome for one side. `crop` is in the orientation the localizer
/// sees: left crops are mirrored so both sides present the same way.
struct CropPlan {
  Side side = Side::Right;
  bool ok = false;
  std::string error;
  Index3 center{0, 0, 0};
  VoxelBox box;
  bool flipped = false;
  Volume3 crop;

  Index3 offset() const { return box.offset(); }
};

struct StageOneResult {
  std::array<CropPlan, 2> sides;  // [left, right]
  bool labels_swapped = false;
  double downsample_ms = 0.0;
  double segment_ms = 0.0;
  double postprocess_ms = 0.0;
};

/// Downsample, segment, binarize, keep the largest component, upsample with
/// nearest neighbour, take bounding-box centers and cut the crops. If the
/// channel labelled "left" sits to the right of the other one the sides are
/// swapped. Throws PipelineFailure when neither side yields a component.
StageOneResult plan_crops(const PipelineConfig& cfg, const Volume3& image);

/// Heatmap from the localizer frame back to the crop's original orientation.
Volume3 to_original_orientation(const CropPlan& plan, const Volume3& heatmap);
/// Crop voxel (original orientation) to whole-volume voxel.
Index3 to_whole_volume(const CropPlan& plan, const Index3& crop_voxel);
Point3 to_whole_volume(const CropPlan& plan, const Point3& crop_point);

struct SideResult {
  Side side = Side::Right;
  bool ok = false;
  std::string error;
  VoxelBox box;
  Volume3 crop;     // original orientation
  Volume3 heatmap;  // original orientation
  Index3 target{0, 0, 0};  // whole-volume voxel
};

/// Single deterministic localizer pass on a planned crop.
SideResult localize_side(const CropPlan& plan, const Localizer& localizer);

struct StageTimings {
  double downsample_ms = 0.0;
  double segment_ms = 0.0;
  double postprocess_ms = 0.0;
  double localize_ms = 0.0;
};

struct PipelineResult {
  std::array<SideResult, 2> sides;  // [left, right]
  bool labels_swapped = false;
  StageTimings timings;

  const SideResult& side(Side s) const { return sides[s == Side::Left ? 0 : 1]; }
};

PipelineResult run_pipeline(const PipelineConfig& cfg, const Volume3& image);

nlohmann::json to_json(const PipelineResult& result);

}  // namespace dbsloc
