#include "dbsloc/oracle_localizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dbsloc/errors.hpp"
#include "dbsloc/rng.hpp"

namespace dbsloc {

namespace {

Point3 far_location(const Point3& truth, const Index3& dims, double min_distance, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Point3 p(std::floor(unit(rng) * dims[0]), std::floor(unit(rng) * dims[1]), std::floor(unit(rng) * dims[2]));
    if ((p - truth).norm() >= min_distance) return p;
  }
  // Farthest corner.
  Point3 corner;
  for (int a = 0; a < 3; ++a) corner[a] = truth[a] < (dims[a] - 1) / 2.0 ? dims[a] - 1 : 0;
  return corner;
}

}  // namespace

void validate(const OracleLocalizerConfig& cfg) {
  if (!(cfg.jitter_std >= 0.0)) throw InvalidArgument("oracle jitter_std must be >= 0");
  if (!(cfg.failure_rate >= 0.0 && cfg.failure_rate <= 1.0)) throw InvalidArgument("oracle failure_rate must be in [0,1]");
  if (!cfg.bias.allFinite()) throw InvalidArgument("oracle bias must be finite");
  validate(cfg.heatmap);
}

Volume3 oracle_localize(const OracleLocalizerConfig& cfg, const TargetPoint& truth, const Volume3& v, bool stochastic,
                        std::uint64_t seed) {
  validate(cfg);
  const Index3& d = v.dims();
  for (int a = 0; a < 3; ++a) {
    if (!(truth.position[a] >= 0.0 && truth.position[a] <= d[a] - 1)) {
      throw InvalidArgument("oracle truth lies outside the volume");
    }
  }

  Point3 center = truth.position + cfg.bias;
  bool failed = false;
  std::mt19937_64 rng;
  if (stochastic) {
    rng.seed(mix_seed(seed, 0x6f7261636c65ULL));
    if (cfg.jitter_std > 0.0) {
      std::normal_distribution<double> jitter(0.0, cfg.jitter_std);
      for (int a = 0; a < 3; ++a) center[a] += jitter(rng);
    }
    failed = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.failure_rate;
  } else {
    rng.seed(mix_seed(cfg.failure_seed, 0x6661696cULL));
    failed = unit_from_bits(mix_seed(cfg.failure_seed, 0x64656369ULL)) < cfg.failure_rate;
  }
  if (failed) center = far_location(truth.position, d, cfg.min_failure_distance, rng);
  return gaussian_heatmap(cfg.heatmap, center, d, v.spacing());
}

Point3 locate_marker(const Volume3& v, int top_k) {
  if (v.empty()) throw InvalidArgument("locate_marker on an empty volume");
  auto data = v.data();
  const std::size_t k = std::min<std::size_t>(std::max(top_k, 1), data.size());
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto brighter = [&](std::size_t a, std::size_t b) { return data[a] > data[b] || (data[a] == data[b] && a < b); };
  std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), brighter);
  idx.resize(k);

  std::vector<Point3> pts;
  pts.reserve(k);
  for (std::size_t n : idx) pts.push_back(to_point(v.voxel_of(n)));

  Point3 median;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> c(k);
    for (std::size_t n = 0; n < k; ++n) c[n] = pts[n][a];
    std::nth_element(c.begin(), c.begin() + k / 2, c.end());
    median[a] = c[k / 2];
  }

  Point3 sum = Point3::Zero();
  int count = 0;
  for (const Point3& p : pts) {
    if ((p - median).norm() <= 4.0) {
      sum += p;
      ++count;
    }
  }
  return count > 0 ? Point3(sum / count) : median;
}

OracleLocalizer::OracleLocalizer(OracleLocalizerConfig cfg, std::optional<Point3> target, int top_k)
    : cfg_(std::move(cfg)), target_(std::move(target)), top_k_(top_k) {
  validate(cfg_);
}

OracleLocalizer OracleLocalizer::fixed(OracleLocalizerConfig cfg, const Point3& target) {
  return OracleLocalizer(std::move(cfg), target, 0);
}

OracleLocalizer OracleLocalizer::tracking(OracleLocalizerConfig cfg, int top_k) {
  return OracleLocalizer(std::move(cfg), std::nullopt, top_k);
}

Volume3 OracleLocalizer::predict(const Volume3& volume, bool stochastic, std::uint64_t seed) const {
  TargetPoint truth;
  truth.position = target_ ? *target_ : locate_marker(volume, top_k_);
  return oracle_localize(cfg_, truth, volume, stochastic, seed);
}

}  // namespace dbsloc
