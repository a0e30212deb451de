#include "dbsloc/mc_harness.hpp"

#include <string>

#include "dbsloc/errors.hpp"
#include "dbsloc/heatmap.hpp"
#include "dbsloc/mc_statistics.hpp"
#include "dbsloc/volume_io.hpp"

namespace dbsloc {

using nlohmann::json;

namespace {

void require_mode(const McConfig& cfg, McMode expected) {
  validate(cfg);
  if (cfg.mode != expected) {
    throw InvalidArgument("config mode is " + std::string(to_string(cfg.mode)) + ", expected " +
                          std::string(to_string(expected)));
  }
}

class SummaryBuilder {
 public:
  SummaryBuilder(McMode mode, bool keep) : keep_(keep) { summary_.mode = mode; }

  void add(Volume3 sample) {
    summary_.argmax_positions.push_back(to_point(argmax_position(sample)));
    moments_.add(sample);
    if (keep_) summary_.sample_heatmaps.push_back(std::move(sample));
  }

  UncertaintySummary finish() && {
    summary_.mean_map = moments_.mean();
    summary_.variance_map = moments_.variance();
    summary_.centroid = centroid(summary_.argmax_positions);
    summary_.mad = mad(summary_.argmax_positions);
    summary_.final_target = argmax_position(summary_.mean_map);
    return std::move(summary_);
  }

 private:
  bool keep_;
  MomentAccumulator moments_;
  UncertaintySummary summary_;
};

template <typename Fn>
Volume3 guarded(int index, Fn&& fn) {
  try {
    return fn();
  } catch (const SamplingError&) {
    throw;
  } catch (const std::exception& e) {
    throw SamplingError(index, e.what());
  }
}

UncertaintySummary run_chain(const Localizer& localizer, const Volume3& v, const McConfig& cfg, bool stochastic) {
  SummaryBuilder builder(cfg.mode, cfg.keep_samples);
  const Point3 pivot((v.dims()[0] - 1) / 2.0, (v.dims()[1] - 1) / 2.0, (v.dims()[2] - 1) / 2.0);
  for (int n = 0; n < cfg.n_samples; ++n) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(n);
    builder.add(guarded(n, [&] {
      const TransformPair pair = sample_transform(cfg.priors, seed, pivot);
      const Volume3 unrotated = rigid_apply(rigid_invert(pair.spatial), v, Interpolation::Trilinear);
      const Volume3 latent = intensity_apply_inverse(pair.intensity, unrotated);
      const Volume3 latent_pred = localizer.predict(latent, stochastic, seed);
      return rigid_apply(pair.spatial, latent_pred, Interpolation::Trilinear);
    }));
  }
  return std::move(builder).finish();
}

json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

}  // namespace

std::string_view to_string(McMode mode) {
  switch (mode) {
    case McMode::Mcdo:
      return "mcdo";
    case McMode::Tta:
      return "tta";
    case McMode::Hybrid:
      return "hybrid";
  }
  return "unknown";
}

std::optional<McMode> parse_mc_mode(std::string_view name) {
  if (name == "mcdo") return McMode::Mcdo;
  if (name == "tta") return McMode::Tta;
  if (name == "hybrid") return McMode::Hybrid;
  return std::nullopt;
}

void validate(const McConfig& cfg) {
  if (cfg.n_samples < 2) throw InvalidArgument("Monte Carlo runs need at least 2 samples");
  validate(cfg.priors);
}

UncertaintySummary run_mcdo(const Localizer& localizer, const Volume3& v, const McConfig& cfg) {
  require_mode(cfg, McMode::Mcdo);
  SummaryBuilder builder(cfg.mode, cfg.keep_samples);
  for (int t = 0; t < cfg.n_samples; ++t) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(t);
    builder.add(guarded(t, [&] { return localizer.predict(v, true, seed); }));
  }
  return std::move(builder).finish();
}

UncertaintySummary run_tta(const Localizer& localizer, const Volume3& v, const McConfig& cfg) {
  require_mode(cfg, McMode::Tta);
  return run_chain(localizer, v, cfg, false);
}

UncertaintySummary run_hybrid(const Localizer& localizer, const Volume3& v, const McConfig& cfg) {
  require_mode(cfg, McMode::Hybrid);
  return run_chain(localizer, v, cfg, true);
}

UncertaintySummary run_uncertainty(const Localizer& localizer, const Volume3& v, const McConfig& cfg) {
  switch (cfg.mode) {
    case McMode::Mcdo:
      return run_mcdo(localizer, v, cfg);
    case McMode::Tta:
      return run_tta(localizer, v, cfg);
    case McMode::Hybrid:
      return run_hybrid(localizer, v, cfg);
  }
  throw InvalidArgument("unknown Monte Carlo mode");
}

json to_json(const UncertaintySummary& s) {
  json positions = json::array();
  for (const Point3& p : s.argmax_positions) positions.push_back(point_json(p));
  return {
      {"mode", to_string(s.mode)},
      {"n_samples", s.argmax_positions.size()},
      {"mad", s.mad},
      {"centroid", point_json(s.centroid)},
      {"final_target", json::array({s.final_target[0], s.final_target[1], s.final_target[2]})},
      {"argmax_positions", positions},
  };
}

void write_summary_maps(const UncertaintySummary& summary, const std::filesystem::path& stem) {
  write_volume(summary.mean_map, std::filesystem::path(stem.string() + "_mean"));
  write_volume(summary.variance_map, std::filesystem::path(stem.string() + "_variance"));
}

}  // namespace dbsloc
