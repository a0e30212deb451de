#include "dbsloc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dbsloc/errors.hpp"
#include "dbsloc/rng.hpp"
#include "dbsloc/volume_io.hpp"

namespace dbsloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const std::vector<std::string> kModes{"baseline", "mcdo", "tta", "hybrid"};

int mode_rank(const std::string& mode) {
  const auto it = std::find(kModes.begin(), kModes.end(), mode);
  return static_cast<int>(it - kModes.begin());
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InvalidArgument("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json index_json(const Index3& p) { return json::array({p[0], p[1], p[2]}); }
json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }
Point3 point_from(const json& j) { return Point3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

std::string case_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03d", id);
  return buf;
}

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  std::atomic<int> next{0};
  auto loop = [&] {
    for (int i = next++; i < n; i = next++) fn(i);
  };
  const int threads = std::max(1, std::min(workers, n));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(loop);
  loop();
  for (std::thread& t : pool) t.join();
}

std::optional<Side> parse_side(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  return std::nullopt;
}

json heatmap_json(const HeatmapSpec& h) { return {{"sigma", h.sigma}, {"cutoff", h.cutoff}, {"peak", h.peak}}; }

HeatmapSpec heatmap_from(const json& j) {
  check_keys(j, {"sigma", "cutoff", "peak"}, "localizer.heatmap");
  HeatmapSpec h;
  read_opt(j, "sigma", h.sigma);
  read_opt(j, "cutoff", h.cutoff);
  read_opt(j, "peak", h.peak);
  return h;
}

std::shared_ptr<const Localizer> make_localizer(const ExperimentConfig& cfg, const CaseInput& input, Side side) {
  const LocalizerSettings& ls = cfg.localizer;
  const std::uint64_t stream = (static_cast<std::uint64_t>(input.id) << 1) | (side == Side::Right ? 1u : 0u);
  if (ls.kind == LocalizerKind::ConvNet) {
    if (ls.weights) return std::make_shared<ConvNet>(ConvNet::load(ls.convnet, *ls.weights));
    return std::make_shared<ConvNet>(ConvNet::seeded(ls.convnet, mix_seed(cfg.seed, 0x6e6574ULL)));
  }
  OracleLocalizerConfig oc = ls.oracle;
  if (input.injected_failure == side) oc.failure_rate = ls.injected_failure_rate;
  oc.failure_seed = mix_seed(cfg.seed ^ 0x6661696cULL, stream);
  return std::make_shared<OracleLocalizer>(OracleLocalizer::tracking(oc, ls.marker_top_k));
}

ResultRow failed_row(const CaseInput& input, Side side, const std::string& mode, const std::string& why) {
  ResultRow r;
  r.case_id = input.id;
  r.side = side;
  r.mode = mode;
  r.ok = false;
  r.error = why;
  r.truth = round_to_voxel(input.truth[side == Side::Left ? 0 : 1]);
  return r;
}

void fill_target(ResultRow& r, const CaseInput& input, const Index3& predicted) {
  const Point3 truth = input.truth[r.side == Side::Left ? 0 : 1];
  r.ok = true;
  r.predicted = predicted;
  r.truth = round_to_voxel(truth);
  r.error_mm = (to_point(predicted) - truth).norm() * input.spacing_mm;
}

// --- CSV ---------------------------------------------------------------------

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

struct CsvTable {
  std::string hash;
  std::uint64_t seed = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "config_hash") t.hash = value;
        if (key == "seed") t.seed = std::stoull(value);
      }
      continue;
    }
    if (t.header.empty()) {
      t.header = split(line, ',');
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() != t.header.size()) throw SchemaError("row width differs from header in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw SchemaError(path.string() + " has no header row");
  return t;
}

std::string csv_preamble(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

// --- manifest ----------------------------------------------------------------

struct ManifestCase {
  int id = 0;
  bool hard = false;
  std::optional<Side> injected_failure;
  std::array<Point3, 2> truth{Point3::Zero(), Point3::Zero()};
  double spacing_mm = 1.0;
  fs::path image, mask_left, mask_right;
};

std::vector<ManifestCase> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestCase> out;
  try {
    json doc;
    in >> doc;
    const fs::path root = path.parent_path();
    for (const json& c : doc.at("cases")) {
      ManifestCase m;
      m.id = c.at("id").get<int>();
      m.hard = c.at("hard").get<bool>();
      if (!c.at("injected_failure").is_null()) {
        m.injected_failure = parse_side(c.at("injected_failure").get<std::string>());
        if (!m.injected_failure) throw SchemaError("bad injected_failure side");
      }
      m.truth[0] = point_from(c.at("truth_targets").at("left"));
      m.truth[1] = point_from(c.at("truth_targets").at("right"));
      m.spacing_mm = c.at("spec").at("spacing_mm").get<double>();
      const json& f = c.at("files");
      m.image = root / f.at("image").get<std::string>();
      m.mask_left = root / f.at("mask_left").get<std::string>();
      m.mask_right = root / f.at("mask_right").get<std::string>();
      out.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw SchemaError("malformed manifest " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace

// --- config ------------------------------------------------------------------

void validate(const ExperimentConfig& cfg) {
  if (cfg.cases < 1) throw InvalidArgument("cohort needs at least one case");
  if (cfg.workers < 1) throw InvalidArgument("workers must be >= 1");
  if (cfg.mix.hard_count < 0 || cfg.mix.hard_count > cfg.cases) throw InvalidArgument("hard count out of range");
  if (cfg.mix.injected_failures < 0 || cfg.mix.injected_failures > cfg.cases) {
    throw InvalidArgument("injected failure count out of range");
  }
  if (cfg.modes.empty()) throw InvalidArgument("no modes selected");
  std::set<std::string> seen;
  for (const std::string& m : cfg.modes) {
    if (mode_rank(m) == static_cast<int>(kModes.size())) throw InvalidArgument("unknown mode '" + m + "'");
    if (!seen.insert(m).second) throw InvalidArgument("mode '" + m + "' listed twice");
  }
  if (cfg.n_samples < 2) throw InvalidArgument("n_samples must be >= 2");
  validate(cfg.priors);
  validate(cfg.localizer.oracle);
  if (!(cfg.localizer.injected_failure_rate >= 0.0 && cfg.localizer.injected_failure_rate <= 1.0)) {
    throw InvalidArgument("injected failure rate must be in [0,1]");
  }
  if (cfg.localizer.kind == LocalizerKind::ConvNet) validate(cfg.localizer.convnet);
  for (int a = 0; a < 3; ++a)
    if (cfg.coarse_dims[a] < 2) throw InvalidArgument("coarse dims must be >= 2");
}

json to_json(const ExperimentConfig& cfg) {
  const LocalizerSettings& ls = cfg.localizer;
  json loc = {{"kind", ls.kind == LocalizerKind::Oracle ? "oracle" : "convnet"},
              {"jitter_std", ls.oracle.jitter_std},
              {"bias", point_json(ls.oracle.bias)},
              {"failure_rate", ls.oracle.failure_rate},
              {"injected_failure_rate", ls.injected_failure_rate},
              {"min_failure_distance", ls.oracle.min_failure_distance},
              {"top_k", ls.marker_top_k},
              {"heatmap", heatmap_json(ls.oracle.heatmap)},
              {"channels", ls.convnet.channels},
              {"dropout_rate", ls.convnet.dropout_rate}};
  if (ls.weights) loc["weights"] = ls.weights->string();
  json j = {{"out", cfg.out_dir.string()},
            {"seed", cfg.seed},
            {"workers", cfg.workers},
            {"cohort",
             {{"cases", cfg.cases},
              {"hard", cfg.mix.hard_count},
              {"injected_failures", cfg.mix.injected_failures},
              {"phantom", to_json(cfg.base)}}},
            {"modes", cfg.modes},
            {"n_samples", cfg.n_samples},
            {"priors", to_json(cfg.priors)},
            {"localizer", loc},
            {"segmenter",
             {{"confidence", cfg.segmenter.confidence},
              {"boundary_noise", cfg.segmenter.boundary_noise},
              {"swap_labels", cfg.segmenter.swap_labels}}},
            {"coarse_dims", index_json(cfg.coarse_dims)},
            {"export_maps", cfg.export_maps}};
  if (cfg.manifest) j["manifest"] = cfg.manifest->string();
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    check_keys(j,
               {"out", "manifest", "seed", "workers", "cohort", "modes", "n_samples", "priors", "localizer",
                "segmenter", "coarse_dims", "export_maps"},
               "config");
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("manifest")) cfg.manifest = fs::path(j.at("manifest").get<std::string>());
    read_opt(j, "seed", cfg.seed);
    read_opt(j, "workers", cfg.workers);
    if (j.contains("cohort")) {
      const json& c = j.at("cohort");
      check_keys(c, {"cases", "hard", "injected_failures", "phantom"}, "cohort");
      read_opt(c, "cases", cfg.cases);
      read_opt(c, "hard", cfg.mix.hard_count);
      read_opt(c, "injected_failures", cfg.mix.injected_failures);
      if (c.contains("phantom")) cfg.base = phantom_spec_from_json(c.at("phantom"));
    }
    read_opt(j, "modes", cfg.modes);
    read_opt(j, "n_samples", cfg.n_samples);
    if (j.contains("priors")) cfg.priors = priors_from_json(j.at("priors"));
    if (j.contains("localizer")) {
      const json& l = j.at("localizer");
      check_keys(l,
                 {"kind", "jitter_std", "bias", "failure_rate", "injected_failure_rate", "min_failure_distance",
                  "top_k", "heatmap", "channels", "dropout_rate", "weights"},
                 "localizer");
      LocalizerSettings& ls = cfg.localizer;
      if (l.contains("kind")) {
        const std::string kind = l.at("kind").get<std::string>();
        if (kind == "oracle") {
          ls.kind = LocalizerKind::Oracle;
        } else if (kind == "convnet") {
          ls.kind = LocalizerKind::ConvNet;
        } else {
          throw InvalidArgument("unknown localizer kind '" + kind + "'");
        }
      }
      read_opt(l, "jitter_std", ls.oracle.jitter_std);
      if (l.contains("bias")) ls.oracle.bias = point_from(l.at("bias"));
      read_opt(l, "failure_rate", ls.oracle.failure_rate);
      read_opt(l, "injected_failure_rate", ls.injected_failure_rate);
      read_opt(l, "min_failure_distance", ls.oracle.min_failure_distance);
      read_opt(l, "top_k", ls.marker_top_k);
      if (l.contains("heatmap")) ls.oracle.heatmap = heatmap_from(l.at("heatmap"));
      read_opt(l, "channels", ls.convnet.channels);
      read_opt(l, "dropout_rate", ls.convnet.dropout_rate);
      if (l.contains("weights")) ls.weights = fs::path(l.at("weights").get<std::string>());
    }
    if (j.contains("segmenter")) {
      const json& s = j.at("segmenter");
      check_keys(s, {"confidence", "boundary_noise", "swap_labels"}, "segmenter");
      read_opt(s, "confidence", cfg.segmenter.confidence);
      read_opt(s, "boundary_noise", cfg.segmenter.boundary_noise);
      read_opt(s, "swap_labels", cfg.segmenter.swap_labels);
    }
    if (j.contains("coarse_dims")) {
      const json& d = j.at("coarse_dims");
      cfg.coarse_dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }
    read_opt(j, "export_maps", cfg.export_maps);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig cfg = experiment_config_from_json(j);
  if (cfg.localizer.weights && !fs::exists(*cfg.localizer.weights)) {
    throw IoError("weight file " + cfg.localizer.weights->string() + " does not exist");
  }
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  // Where the files live and how many threads ran does not change the results.
  j.erase("out");
  j.erase("manifest");
  j.erase("workers");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- run ---------------------------------------------------------------------

CaseOutcome evaluate_case(const ExperimentConfig& cfg, const CaseInput& input, const fs::path* map_dir) {
  CaseOutcome out;
  out.detail = {{"id", input.id},
                {"hard", input.hard},
                {"injected_failure", input.injected_failure ? json(to_string(*input.injected_failure)) : json()}};
  const std::array<Side, 2> sides{Side::Left, Side::Right};

  auto fail_all = [&](const std::string& why) {
    for (Side s : sides)
      for (const std::string& m : cfg.modes) out.rows.push_back(failed_row(input, s, m, why));
    out.detail["error"] = why;
  };

  StageOneResult stage1;
  PipelineConfig pc;
  try {
    SegmenterOptions so = cfg.segmenter;
    so.seed = mix_seed(cfg.seed, 0x736567ULL + static_cast<std::uint64_t>(input.id));
    pc.segmenter = std::make_shared<SyntheticSegmenter>(input.left_mask, input.right_mask, so);
    pc.coarse_dims = cfg.coarse_dims;
    pc.crop_extent = {cfg.base.crop_extent, cfg.base.crop_extent, cfg.base.crop_extent};
    pc.heatmap = cfg.localizer.oracle.heatmap;
    stage1 = plan_crops(pc, input.image);
  } catch (const std::exception& e) {
    fail_all(std::string("stage 1: ") + e.what());
    return out;
  }
  out.detail["labels_swapped"] = stage1.labels_swapped;

  json side_details = json::array();
  for (const CropPlan& plan : stage1.sides) {
    json sd = {{"side", to_string(plan.side)}, {"ok", plan.ok}};
    if (!plan.ok) {
      sd["error"] = plan.error;
      for (const std::string& m : cfg.modes) out.rows.push_back(failed_row(input, plan.side, m, plan.error));
      side_details.push_back(std::move(sd));
      continue;
    }
    sd["box"] = {{"center", index_json(plan.box.center)}, {"offset", index_json(plan.offset())}};
    std::shared_ptr<const Localizer> loc;
    try {
      loc = make_localizer(cfg, input, plan.side);
    } catch (const std::exception& e) {
      for (const std::string& m : cfg.modes) out.rows.push_back(failed_row(input, plan.side, m, e.what()));
      sd["error"] = e.what();
      side_details.push_back(std::move(sd));
      continue;
    }

    json modes = json::object();
    for (const std::string& mode : cfg.modes) {
      ResultRow row = failed_row(input, plan.side, mode, "");
      const auto t0 = Clock::now();
      try {
        json md;
        if (mode == "baseline") {
          const SideResult r = localize_side(plan, *loc);
          fill_target(row, input, r.target);
        } else {
          McConfig mc;
          mc.mode = *parse_mc_mode(mode);
          mc.n_samples = cfg.n_samples;
          mc.priors = cfg.priors;
          mc.base_seed = mix_seed(cfg.seed, (static_cast<std::uint64_t>(input.id) << 8) |
                                                (plan.side == Side::Right ? 0x10u : 0u) | mode_rank(mode));
          const UncertaintySummary s = run_uncertainty(*loc, plan.crop, mc);
          Index3 t = s.final_target;
          Point3 c = s.centroid;
          if (plan.flipped) {
            t = flip_lr_index(t, plan.crop.dims());
            c.x() = plan.crop.dims()[0] - 1 - c.x();
          }
          fill_target(row, input, to_whole_volume(plan, t));
          row.mad = s.mad;
          md["centroid"] = point_json(to_whole_volume(plan, c));
          md["n_samples"] = s.argmax_positions.size();
          if (map_dir) {
            UncertaintySummary oriented;
            oriented.mean_map = to_original_orientation(plan, s.mean_map);
            oriented.variance_map = to_original_orientation(plan, s.variance_map);
            write_summary_maps(oriented, *map_dir / (std::string(to_string(plan.side)) + "_" + mode));
          }
        }
        row.runtime_ms = ms_since(t0);
        md["target"] = index_json(row.predicted);
        md["error_mm"] = row.error_mm;
        md["mad"] = row.mad ? json(*row.mad) : json();
        md["runtime_ms"] = row.runtime_ms;
        modes[mode] = std::move(md);
      } catch (const std::exception& e) {
        row = failed_row(input, plan.side, mode, e.what());
        row.runtime_ms = ms_since(t0);
        modes[mode] = {{"error", e.what()}};
      }
      out.rows.push_back(std::move(row));
    }
    sd["modes"] = std::move(modes);
    side_details.push_back(std::move(sd));
  }
  out.detail["sides"] = std::move(side_details);
  return out;
}

void flag_outliers(std::vector<ResultRow>& rows) {
  std::map<std::string, std::vector<std::size_t>> by_mode;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    rows[n].flagged = false;
    if (rows[n].ok && rows[n].mad) by_mode[rows[n].mode].push_back(n);
  }
  for (const auto& [mode, idx] : by_mode) {
    if (idx.size() < 4) continue;
    std::vector<double> mads;
    for (std::size_t n : idx) mads.push_back(*rows[n].mad);
    for (std::size_t f : rejection_stats(mads).flagged) rows[idx[f]].flagged = true;
  }
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.case_id != b.case_id) return a.case_id < b.case_id;
    if (a.side != b.side) return a.side == Side::Left;
    return mode_rank(a.mode) < mode_rank(b.mode);
  });
}

std::string results_csv(const std::vector<ResultRow>& rows, const std::string& hash, std::uint64_t seed) {
  std::string out = csv_preamble(hash, seed);
  out += kResultColumns;
  out += '\n';
  for (const ResultRow& r : rows) {
    std::string line = std::to_string(r.case_id) + "," + std::string(to_string(r.side)) + "," + r.mode + "," +
                       (r.ok ? "ok" : "failed");
    for (int a = 0; a < 3; ++a) line += "," + (r.ok ? std::to_string(r.predicted[a]) : std::string());
    for (int a = 0; a < 3; ++a) line += "," + std::to_string(r.truth[a]);
    line += "," + (r.ok ? fixed6(r.error_mm) : std::string());
    line += "," + (r.ok && r.mad ? fixed6(*r.mad) : std::string());
    line += std::string(",") + (r.flagged ? "1" : "0");
    out += line + "\n";
  }
  return out;
}

void cmd_generate(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::string hash = config_hash(cfg);
  const fs::path manifest = cfg.manifest_path();
  const fs::path root = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  make_dirs(root);

  const std::vector<CohortEntry> plan = plan_cohort(cfg.cases, cfg.mix, cfg.seed, cfg.base);
  std::vector<json> entries(plan.size());
  std::vector<std::string> errors(plan.size());
  parallel_for(static_cast<int>(plan.size()), cfg.workers, [&](int i) {
    const CohortEntry& e = plan[i];
    try {
      const PhantomCase pc = generate_phantom(e.spec);
      const fs::path rel = fs::path("cases") / case_name(e.id);
      make_dirs(root / rel);
      write_volume(pc.image, root / rel / "image");
      write_volume(pc.left_mask, root / rel / "mask_left");
      write_volume(pc.right_mask, root / rel / "mask_right");
      entries[i] = {{"id", e.id},
                    {"files",
                     {{"image", (rel / "image").generic_string()},
                      {"mask_left", (rel / "mask_left").generic_string()},
                      {"mask_right", (rel / "mask_right").generic_string()}}},
                    {"truth_targets",
                     {{"left", point_json(pc.target(Side::Left).position)},
                      {"right", point_json(pc.target(Side::Right).position)}}},
                    {"hard", e.hard},
                    {"injected_failure", e.injected_failure ? json(to_string(*e.injected_failure)) : json()},
                    {"spec", to_json(e.spec)}};
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw IoError(case_name(plan[i].id) + ": " + errors[i]);
  }
  const json doc = {{"config_hash", hash}, {"seed", cfg.seed}, {"cases", entries}};
  write_text(manifest, doc.dump(2) + "\n");
}

RunReport cmd_run(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::string hash = config_hash(cfg);
  const std::vector<ManifestCase> cases = read_manifest(cfg.manifest_path());
  make_dirs(cfg.out_dir);

  std::vector<std::vector<ResultRow>> per_case(cases.size());
  std::vector<std::string> io_errors(cases.size());
  parallel_for(static_cast<int>(cases.size()), cfg.workers, [&](int i) {
    const ManifestCase& m = cases[i];
    CaseInput input;
    input.id = m.id;
    input.hard = m.hard;
    input.injected_failure = m.injected_failure;
    input.truth = m.truth;
    input.spacing_mm = m.spacing_mm;
    const fs::path case_dir = cfg.out_dir / "cases" / case_name(m.id);
    CaseOutcome outcome;
    try {
      input.image = read_volume(m.image);
      input.left_mask = read_volume(m.mask_left);
      input.right_mask = read_volume(m.mask_right);
    } catch (const std::exception& e) {
      outcome.detail = {{"id", m.id}, {"error", std::string("input: ") + e.what()}};
      for (Side s : {Side::Left, Side::Right})
        for (const std::string& mode : cfg.modes)
          outcome.rows.push_back(failed_row(input, s, mode, std::string("input: ") + e.what()));
    }
    try {
      make_dirs(case_dir);
      if (outcome.rows.empty()) outcome = evaluate_case(cfg, input, cfg.export_maps ? &case_dir : nullptr);
      outcome.detail["config_hash"] = hash;
      outcome.detail["seed"] = cfg.seed;
      write_text(case_dir / "result.json", outcome.detail.dump(2) + "\n");
    } catch (const IoError& e) {
      io_errors[i] = e.what();
    }
    per_case[i] = std::move(outcome.rows);
  });
  for (const std::string& e : io_errors)
    if (!e.empty()) throw IoError(e);

  RunReport report;
  for (auto& rows : per_case) {
    if (std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.ok; })) ++report.failed_cases;
    for (ResultRow& r : rows) report.rows.push_back(std::move(r));
  }
  flag_outliers(report.rows);
  sort_rows(report.rows);
  write_text(cfg.out_dir / "results.csv", results_csv(report.rows, hash, cfg.seed));
  return report;
}

// --- analyze -----------------------------------------------------------------

AnalyzeReport cmd_analyze(const ExperimentConfig& cfg) {
  const CsvTable table = read_csv(cfg.out_dir / "results.csv");
  const int c_case = table.column("case_id"), c_side = table.column("side"), c_mode = table.column("mode"),
            c_status = table.column("status"), c_mad = table.column("mad");
  std::string missing;
  for (auto [name, col] : {std::pair{"case_id", c_case}, {"side", c_side}, {"mode", c_mode}, {"status", c_status},
                           {"mad", c_mad}}) {
    if (col < 0) missing += std::string(missing.empty() ? "" : ", ") + name;
  }
  if (!missing.empty()) throw SchemaError("results table lacks column(s): " + missing);

  std::map<int, ManifestCase> labels;
  for (ManifestCase& m : read_manifest(cfg.manifest_path())) labels[m.id] = std::move(m);

  struct Entry {
    int case_id;
    Side side;
    double mad;
    bool label;
  };
  std::map<std::string, std::vector<Entry>> by_mode;
  for (const auto& cells : table.rows) {
    if (cells[c_status] != "ok" || cells[c_mad].empty()) continue;
    Entry e{};
    try {
      e.case_id = std::stoi(cells[c_case]);
      e.mad = std::stod(cells[c_mad]);
    } catch (const std::exception&) {
      throw SchemaError("non-numeric case_id or mad in results table");
    }
    const auto side = parse_side(cells[c_side]);
    if (!side) throw SchemaError("bad side '" + cells[c_side] + "' in results table");
    e.side = *side;
    const auto it = labels.find(e.case_id);
    if (it == labels.end()) throw SchemaError("case " + cells[c_case] + " is not in the manifest");
    e.label = it->second.hard || it->second.injected_failure == e.side;
    by_mode[cells[c_mode]].push_back(e);
  }

  AnalyzeReport report;
  json modes_json = json::object();
  std::string table_csv = csv_preamble(table.hash, table.seed) + "case_id,side,mode,mad,flagged,label\n";
  std::vector<std::string> ordered;
  for (const auto& [mode, _] : by_mode) ordered.push_back(mode);
  std::sort(ordered.begin(), ordered.end(),
            [](const std::string& a, const std::string& b) { return mode_rank(a) < mode_rank(b) || (mode_rank(a) == mode_rank(b) && a < b); });

  for (const std::string& mode : ordered) {
    const std::vector<Entry>& entries = by_mode[mode];
    ModeReport mr;
    mr.mode = mode;
    for (const Entry& e : entries) mr.positives += e.label;
    std::vector<bool> flagged(entries.size(), false);
    json mj = {{"n", entries.size()}, {"positives", mr.positives}};
    if (entries.size() < 4) {
      mr.skipped = true;
      report.warnings.push_back("mode " + mode + " has " + std::to_string(entries.size()) +
                                " rows with a mad; at least 4 are needed, skipped");
      mj["skipped"] = true;
    } else {
      std::vector<double> mads;
      for (const Entry& e : entries) mads.push_back(e.mad);
      mr.stats = rejection_stats(mads);
      json flagged_json = json::array();
      for (std::size_t f : mr.stats.flagged) {
        flagged[f] = true;
        (entries[f].label ? mr.true_flags : mr.false_flags)++;
        flagged_json.push_back({{"case_id", entries[f].case_id},
                                {"side", to_string(entries[f].side)},
                                {"mad", entries[f].mad},
                                {"label", entries[f].label}});
      }
      const int flags = mr.true_flags + mr.false_flags;
      mr.recall = mr.positives > 0 ? static_cast<double>(mr.true_flags) / mr.positives : 0.0;
      mr.precision = flags > 0 ? static_cast<double>(mr.true_flags) / flags : 0.0;
      mj.update({{"skipped", false},
                 {"q1", mr.stats.q1},
                 {"median", mr.stats.median},
                 {"q3", mr.stats.q3},
                 {"iqr", mr.stats.iqr},
                 {"upper_fence", mr.stats.upper_fence},
                 {"upper_whisker", mr.stats.upper_whisker},
                 {"flagged", flagged_json},
                 {"true_flags", mr.true_flags},
                 {"false_flags", mr.false_flags},
                 {"recall", mr.positives > 0 ? json(mr.recall) : json()},
                 {"precision", flags > 0 ? json(mr.precision) : json()}});
    }
    for (std::size_t n = 0; n < entries.size(); ++n) {
      const Entry& e = entries[n];
      table_csv += std::to_string(e.case_id) + "," + std::string(to_string(e.side)) + "," + mode + "," +
                   fixed6(e.mad) + "," + (flagged[n] ? "1" : "0") + "," + (e.label ? "1" : "0") + "\n";
    }
    modes_json[mode] = std::move(mj);
    report.modes.push_back(std::move(mr));
  }
  report.json = {{"config_hash", table.hash}, {"seed", table.seed}, {"modes", modes_json},
                 {"warnings", report.warnings}};
  write_text(cfg.out_dir / "rejection_report.json", report.json.dump(2) + "\n");
  write_text(cfg.out_dir / "rejection_table.csv", table_csv);
  return report;
}

}  // namespace dbsloc
