#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbsloc/convnet.hpp"
#include "dbsloc/mc_harness.hpp"
#include "dbsloc/mc_statistics.hpp"
#include "dbsloc/oracle_localizer.hpp"
#include "dbsloc/phantom.hpp"
#include "dbsloc/pipeline.hpp"
#include "dbsloc/synthetic_segmenter.hpp"

namespace dbsloc {

enum class LocalizerKind { Oracle, ConvNet };

struct LocalizerSettings {
  static OracleLocalizerConfig default_oracle() {
    OracleLocalizerConfig c;
    c.jitter_std = 1.0;
    return c;
  }

  LocalizerKind kind = LocalizerKind::Oracle;
  OracleLocalizerConfig oracle = default_oracle();
  double injected_failure_rate = 1.0;  // oracle failure rate on the injected side
  int marker_top_k = 33;
  ConvNetSpec convnet;
  std::optional<std::filesystem::path> weights;  // seeded network when absent
};

/// Everything a generate/run/analyze round needs. JSON keys mirror the fields.
struct ExperimentConfig {
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> manifest;  // default: <out>/manifest.json
  std::uint64_t seed = 0;
  int workers = 1;

  int cases = 10;
  CohortMix mix;
  PhantomSpec base;

  std::vector<std::string> modes{"baseline", "mcdo", "tta", "hybrid"};
  int n_samples = 100;
  TransformPriors priors;

  LocalizerSettings localizer;
  SegmenterOptions segmenter;
  Index3 coarse_dims{80, 80, 80};
  bool export_maps = false;

  std::filesystem::path manifest_path() const { return manifest ? *manifest : out_dir / "manifest.json"; }
};

/// Throws InvalidArgument for unknown modes, n < 1, workers < 1 and the like.
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct ResultRow {
  int case_id = 0;
  Side side = Side::Left;
  std::string mode;
  bool ok = false;
  std::string error;
  Index3 predicted{0, 0, 0};
  Index3 truth{0, 0, 0};
  double error_mm = 0.0;
  std::optional<double> mad;  // empty for baseline
  bool flagged = false;
  double runtime_ms = 0.0;
};

/// Fixed column order of results.csv.
inline constexpr const char* kResultColumns =
    "case_id,side,mode,status,pred_x,pred_y,pred_z,truth_x,truth_y,truth_z,error_mm,mad,flagged";

struct CaseInput {
  int id = 0;
  bool hard = false;
  std::optional<Side> injected_failure;
  std::array<Point3, 2> truth{Point3::Zero(), Point3::Zero()};  // [left, right], voxels
  double spacing_mm = 1.0;
  Volume3 image;
  Volume3 left_mask;
  Volume3 right_mask;
};

struct CaseOutcome {
  std::vector<ResultRow> rows;
  nlohmann::json detail;
};

/// All requested modes on both sides of one case. Never throws for per-case
/// problems; they become failed rows.
CaseOutcome evaluate_case(const ExperimentConfig& cfg, const CaseInput& input,
                          const std::filesystem::path* map_dir = nullptr);

/// Sets `flagged` per mode with the upper-whisker rule over successful rows.
void flag_outliers(std::vector<ResultRow>& rows);

void sort_rows(std::vector<ResultRow>& rows);
std::string results_csv(const std::vector<ResultRow>& rows, const std::string& hash, std::uint64_t seed);

struct RunReport {
  std::vector<ResultRow> rows;
  int failed_cases = 0;
};

/// Writes <out>/cases/case_XXX/ volumes and the manifest.
void cmd_generate(const ExperimentConfig& cfg);
/// Writes <out>/results.csv and <out>/cases/case_XXX/result.json.
RunReport cmd_run(const ExperimentConfig& cfg);

struct ModeReport {
  std::string mode;
  bool skipped = false;
  BoxplotStats stats;
  int positives = 0;
  int true_flags = 0;
  int false_flags = 0;
  double recall = 0.0;
  double precision = 0.0;
};

struct AnalyzeReport {
  std::vector<ModeReport> modes;
  std::vector<std::string> warnings;
  nlohmann::json json;
};

/// Reads <out>/results.csv and the manifest labels; writes
/// <out>/rejection_report.json and the long-format <out>/rejection_table.csv.
AnalyzeReport cmd_analyze(const ExperimentConfig& cfg);

}  // namespace dbsloc
