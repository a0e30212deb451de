#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dbsloc/predictors.hpp"
#include "dbsloc/transform_sampling.hpp"

namespace dbsloc {

enum class McMode { Mcdo, Tta, Hybrid };

std::string_view to_string(McMode mode);
std::optional<McMode> parse_mc_mode(std::string_view name);

struct McConfig {
  McMode mode = McMode::Mcdo;
  int n_samples = 100;
  TransformPriors priors;
  std::uint64_t base_seed = 0;
  bool keep_samples = false;  // retain every sample heatmap in the summary
};

void validate(const McConfig& cfg);

struct UncertaintySummary {
  McMode mode = McMode::Mcdo;
  std::vector<Volume3> sample_heatmaps;  // empty unless keep_samples
  Volume3 mean_map;
  Volume3 variance_map;
  std::vector<Point3> argmax_positions;  // per sample, input frame
  Point3 centroid = Point3::Zero();
  double mad = 0.0;
  Index3 final_target{0, 0, 0};  // argmax of mean_map
};

/// T stochastic passes on the untransformed input, seeds base_seed + t.
UncertaintySummary run_mcdo(const Localizer& localizer, const Volume3& v, const McConfig& cfg);

/// N passes through the acquisition-model inversion chain: for each sample
/// draw (T_s, T_i), predict on T_i^-1(T_s^-1(v)) deterministically and map the
/// prediction back with T_s. Rotations pivot on the grid center.
UncertaintySummary run_tta(const Localizer& localizer, const Volume3& v, const McConfig& cfg);

/// The TTA chain with stochastic predictor passes.
UncertaintySummary run_hybrid(const Localizer& localizer, const Volume3& v, const McConfig& cfg);

UncertaintySummary run_uncertainty(const Localizer& localizer, const Volume3& v, const McConfig& cfg);

/// Scalar fields and positions.
nlohmann::json to_json(const UncertaintySummary& summary);

/// Writes `<stem>_mean` and `<stem>_variance` volume file pairs.
void write_summary_maps(const UncertaintySummary& summary, const std::filesystem::path& stem);

}  // namespace dbsloc
