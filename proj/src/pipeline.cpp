#include "dbsloc/pipeline.hpp"

#include <chrono>

#include "dbsloc/errors.hpp"

namespace dbsloc {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

json index_json(const Index3& p) { return json::array({p[0], p[1], p[2]}); }

}  // namespace

void validate(const PipelineConfig& cfg) {
  for (int a = 0; a < 3; ++a) {
    if (cfg.coarse_dims[a] < 1) throw InvalidArgument("coarse dims must be positive");
    if (cfg.crop_extent[a] < 1) throw InvalidArgument("crop extent must be positive");
  }
  if (!cfg.segmenter) throw InvalidArgument("pipeline needs a segmenter");
  validate(cfg.heatmap);
}

StageOneResult plan_crops(const PipelineConfig& cfg, const Volume3& image) {
  validate(cfg);
  StageOneResult result;

  auto t0 = Clock::now();
  const Volume3 coarse = downsample_to(image, cfg.coarse_dims);
  result.downsample_ms = ms_since(t0);

  t0 = Clock::now();
  const SegmentationChannels channels = cfg.segmenter->predict(coarse);
  result.segment_ms = ms_since(t0);

  t0 = Clock::now();
  for (int s = 0; s < 2; ++s) {
    CropPlan& plan = result.sides[s];
    plan.side = s == 0 ? Side::Left : Side::Right;
    const Volume3& prob = channels[s + 1];
    Volume3 binary = prob.like();
    for (std::size_t n = 0; n < prob.size(); ++n) binary.data()[n] = prob.data()[n] >= cfg.binarize_threshold ? 1.0 : 0.0;
    try {
      const Volume3 component = largest_connected_component(binary, cfg.connectivity);
      const Volume3 full = resample_to_dims(component, image.dims(), Interpolation::Nearest);
      plan.center = bounding_box_center(full);
      plan.ok = true;
    } catch (const EmptyComponent& e) {
      plan.error = std::string(to_string(plan.side)) + " segmentation empty: " + e.what();
    }
  }
  if (!result.sides[0].ok && !result.sides[1].ok) {
    throw PipelineFailure("stage 1 found no component on either side");
  }

  // Axis 0 runs left to right, so the left structure has the smaller index.
  if (result.sides[0].ok && result.sides[1].ok && result.sides[0].center[0] > result.sides[1].center[0]) {
    std::swap(result.sides[0].center, result.sides[1].center);
    result.labels_swapped = true;
  }

  for (CropPlan& plan : result.sides) {
    if (!plan.ok) continue;
    plan.box = VoxelBox{plan.center, cfg.crop_extent};
    plan.flipped = plan.side == Side::Left;
    Volume3 crop = crop_box(image, plan.box, 0.0);
    plan.crop = plan.flipped ? flip_lr(crop) : std::move(crop);
  }
  result.postprocess_ms = ms_since(t0);
  return result;
}

Volume3 to_original_orientation(const CropPlan& plan, const Volume3& heatmap) {
  return plan.flipped ? flip_lr(heatmap) : heatmap;
}

Index3 to_whole_volume(const CropPlan& plan, const Index3& crop_voxel) {
  const Index3 off = plan.offset();
  return {off[0] + crop_voxel[0], off[1] + crop_voxel[1], off[2] + crop_voxel[2]};
}

Point3 to_whole_volume(const CropPlan& plan, const Point3& crop_point) {
  return crop_point + to_point(plan.offset());
}

SideResult localize_side(const CropPlan& plan, const Localizer& localizer) {
  SideResult out;
  out.side = plan.side;
  out.box = plan.box;
  out.error = plan.error;
  if (!plan.ok) return out;
  out.crop = to_original_orientation(plan, plan.crop);
  out.heatmap = to_original_orientation(plan, localizer.predict(plan.crop, false, 0));
  out.target = to_whole_volume(plan, argmax_position(out.heatmap));
  out.ok = true;
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Volume3& image) {
  if (!cfg.localizer) throw InvalidArgument("pipeline needs a localizer");
  const StageOneResult stage1 = plan_crops(cfg, image);

  PipelineResult result;
  result.labels_swapped = stage1.labels_swapped;
  result.timings.downsample_ms = stage1.downsample_ms;
  result.timings.segment_ms = stage1.segment_ms;
  result.timings.postprocess_ms = stage1.postprocess_ms;

  const auto t0 = Clock::now();
  for (int s = 0; s < 2; ++s) result.sides[s] = localize_side(stage1.sides[s], *cfg.localizer);
  result.timings.localize_ms = ms_since(t0);
  return result;
}

json to_json(const PipelineResult& result) {
  json sides = json::array();
  for (const SideResult& s : result.sides) {
    json entry = {{"side", to_string(s.side)}, {"ok", s.ok}};
    if (s.ok) {
      entry["target"] = index_json(s.target);
      entry["box"] = {{"center", index_json(s.box.center)}, {"extent", index_json(s.box.extent)},
                      {"offset", index_json(s.box.offset())}};
    } else {
      entry["error"] = s.error;
    }
    sides.push_back(std::move(entry));
  }
  return {
      {"sides", sides},
      {"labels_swapped", result.labels_swapped},
      {"timings_ms",
       {{"downsample", result.timings.downsample_ms},
        {"segment", result.timings.segment_ms},
        {"postprocess", result.timings.postprocess_ms},
        {"localize", result.timings.localize_ms}}},
  };
}

}  // namespace dbsloc
