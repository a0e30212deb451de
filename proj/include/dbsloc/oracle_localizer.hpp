#pragma once

#include <cstdint>
#include <optional>

#include "dbsloc/heatmap.hpp"
#include "dbsloc/predictors.hpp"

namespace dbsloc {

/// Controlled test double for uncertainty experiments.
struct OracleLocalizerConfig {
  double jitter_std = 0.0;          // voxels, stochastic mode only
  Point3 bias = Point3::Zero();     // systematic offset, voxels
  double failure_rate = 0.0;        // probability of a spurious far peak
  double min_failure_distance = 16.0;  // voxels from the truth
  std::uint64_t failure_seed = 0;   // drives failures when stochastic=false
  HeatmapSpec heatmap;
};

void validate(const OracleLocalizerConfig& cfg);

/// Gaussian heatmap at truth + bias (+ jitter when stochastic), replaced by a
/// peak at a random far location with probability failure_rate.
/// Throws InvalidArgument when `truth` lies outside the volume.
Volume3 oracle_localize(const OracleLocalizerConfig& cfg, const TargetPoint& truth, const Volume3& v,
                        bool stochastic, std::uint64_t seed);

/// Centroid of the `top_k` brightest voxels, restricted to those within
/// 4 voxels of their per-axis median position. Ranks only, so any strictly
/// increasing intensity map leaves the answer unchanged.
Point3 locate_marker(const Volume3& v, int top_k = 33);

/// Oracle bound to a target. With a fixed target the point is expressed in
/// the frame of the volumes passed to predict(); in tracking mode the target
/// is re-derived from each input with locate_marker(), which follows the
/// phantom nucleus through crops, flips and rigid transforms.
class OracleLocalizer final : public Localizer {
 public:
  static OracleLocalizer fixed(OracleLocalizerConfig cfg, const Point3& target);
  static OracleLocalizer tracking(OracleLocalizerConfig cfg, int top_k = 33);

  Volume3 predict(const Volume3& volume, bool stochastic, std::uint64_t seed) const override;

  const OracleLocalizerConfig& config() const { return cfg_; }

 private:
  OracleLocalizer(OracleLocalizerConfig cfg, std::optional<Point3> target, int top_k);

  OracleLocalizerConfig cfg_;
  std::optional<Point3> target_;
  int top_k_;
};

}  // namespace dbsloc
