#pragma once

#include <cstdint>
#include <optional>

#include "dbsloc/predictors.hpp"

namespace dbsloc {

struct SegmenterOptions {
  double confidence = 0.9;      // probability given to the labelled class
  double boundary_noise = 0.0;  // chance of relabelling a label-boundary voxel
  bool swap_labels = false;     // emit left-thalamus evidence on the right channel and vice versa
  std::uint64_t seed = 0;
};

/// Used when no truth masks are available: voxels with intensity in
/// [lo, hi] are foreground, split into left/right at the grid midline.
struct ThresholdFallback {
  double lo = 0.5;
  double hi = 0.9;
};

/// Stage-1 stand-in: probability channels built from truth masks (sampled
/// at the physical positions of the input grid) or from the threshold
/// fallback. Channels sum to 1 at every voxel.
SegmentationChannels synthetic_segment(const Volume3& v, const Volume3* left_mask, const Volume3* right_mask,
                                       const SegmenterOptions& options,
                                       const std::optional<ThresholdFallback>& fallback = std::nullopt);

class SyntheticSegmenter final : public Segmenter {
 public:
  SyntheticSegmenter(Volume3 left_mask, Volume3 right_mask, SegmenterOptions options = {});
  static SyntheticSegmenter from_threshold(ThresholdFallback fallback, SegmenterOptions options = {});

  SegmentationChannels predict(const Volume3& volume) const override;

 private:
  SyntheticSegmenter() = default;

  std::optional<Volume3> left_, right_;
  std::optional<ThresholdFallback> fallback_;
  SegmenterOptions options_;
};

}  // namespace dbsloc
