#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "dbsloc/errors.hpp"
#include "dbsloc/mc_harness.hpp"
#include "dbsloc/mc_statistics.hpp"
#include "dbsloc/oracle_localizer.hpp"
#include "dbsloc/phantom.hpp"
#include "dbsloc/volume_io.hpp"

using namespace dbsloc;
namespace fs = std::filesystem;

namespace {

const Volume3& phantom_crop() {
  static const Volume3 crop = [] {
    const PhantomCase pc = generate_phantom(PhantomSpec{});
    return crop_box(pc.image, {round_to_voxel(pc.target(Side::Right).position), {64, 64, 64}});
  }();
  return crop;
}

McConfig mc(McMode mode, int n, std::uint64_t seed = 100) {
  McConfig c;
  c.mode = mode;
  c.n_samples = n;
  c.base_seed = seed;
  return c;
}

OracleLocalizer fixed_oracle(double jitter, double failure = 0.0) {
  OracleLocalizerConfig cfg;
  cfg.jitter_std = jitter;
  cfg.failure_rate = failure;
  return OracleLocalizer::fixed(cfg, Point3(32, 32, 32));
}

class FailsOnSeed final : public Localizer {
 public:
  explicit FailsOnSeed(std::uint64_t bad) : bad_(bad) {}
  Volume3 predict(const Volume3& v, bool, std::uint64_t seed) const override {
    if (seed == bad_) throw InvalidData("boom");
    return v;
  }

 private:
  std::uint64_t bad_;
};

}  // namespace

TEST(Moments, IdenticalSamples) {
  Volume3 a({3, 3, 3}, {1, 1, 1});
  for (std::size_t n = 0; n < a.size(); ++n) a.data()[n] = 0.1 * n;
  const std::vector<Volume3> stack(5, a);
  const MeanVariance mv = mean_variance(stack);
  for (std::size_t n = 0; n < a.size(); ++n) {
    EXPECT_NEAR(mv.mean.data()[n], a.data()[n], 1e-15);
    EXPECT_EQ(mv.variance.data()[n], 0.0);
  }
}

TEST(Moments, TwoSampleHandValue) {
  const std::vector<Volume3> stack{Volume3({1, 1, 1}, {1, 1, 1}, 0.0), Volume3({1, 1, 1}, {1, 1, 1}, 2.0)};
  const MeanVariance mv = mean_variance(stack);
  EXPECT_NEAR(mv.mean.data()[0], 1.0, 1e-12);
  EXPECT_NEAR(mv.variance.data()[0], 1.0, 1e-12);
  EXPECT_THROW(mean_variance(std::span(stack).first(1)), InvalidArgument);
}

TEST(Moments, MatchesTwoPassOracle) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(5.0, 2.0);
  std::vector<Volume3> stack;
  for (int s = 0; s < 37; ++s) {
    Volume3 v({4, 3, 2}, {1, 1, 1});
    for (double& x : v.data()) x = g(rng);
    stack.push_back(std::move(v));
  }
  const MeanVariance mv = mean_variance(stack);
  for (std::size_t n = 0; n < stack[0].size(); ++n) {
    double mean = 0.0;
    for (const Volume3& v : stack) mean += v.data()[n];
    mean /= stack.size();
    double var = 0.0;
    for (const Volume3& v : stack) var += (v.data()[n] - mean) * (v.data()[n] - mean);
    var /= stack.size();
    EXPECT_NEAR(mv.mean.data()[n], mean, 1e-9 * std::abs(mean));
    EXPECT_NEAR(mv.variance.data()[n], var, 1e-9 * var);
  }
}

TEST(Mad, HandValues) {
  const std::vector<Point3> same(4, Point3(1, 2, 3));
  EXPECT_EQ(mad(same), 0.0);
  const std::vector<Point3> pair{Point3(0, 0, 0), Point3(2, 0, 0)};
  EXPECT_NEAR(mad(pair), 1.0, 1e-12);
  EXPECT_EQ(centroid(pair), Point3(1, 0, 0));
  const std::vector<Point3> line{Point3(0, 0, 0), Point3(1, 0, 0), Point3(2, 0, 0)};
  EXPECT_NEAR(mad(line), 2.0 / 3.0, 1e-12);
  EXPECT_THROW(mad(std::vector<Point3>{}), InvalidArgument);
}

TEST(Rejection, TypeSevenQuartiles) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const BoxplotStats s = rejection_stats(v);
  EXPECT_DOUBLE_EQ(s.q1, 3.0);
  EXPECT_DOUBLE_EQ(s.median, 5.0);
  EXPECT_DOUBLE_EQ(s.q3, 7.0);
  EXPECT_DOUBLE_EQ(s.iqr, 4.0);
  EXPECT_DOUBLE_EQ(s.upper_fence, 13.0);
  EXPECT_DOUBLE_EQ(s.upper_whisker, 9.0);
  EXPECT_TRUE(s.flagged.empty());
}

TEST(Rejection, GrossOutlierAndFlatData) {
  const std::vector<double> v{1, 1, 1, 1, 100};
  EXPECT_EQ(rejection_stats(v).flagged, (std::vector<std::size_t>{4}));
  const std::vector<double> flat(6, 2.5);
  const BoxplotStats s = rejection_stats(flat);
  EXPECT_EQ(s.iqr, 0.0);
  EXPECT_TRUE(s.flagged.empty());
  EXPECT_THROW(rejection_stats(std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST(Quantile, Interpolates) {
  const std::vector<double> v{0, 10};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 2.5);
}

TEST(Mcdo, ZeroJitterHasNoSpread) {
  const UncertaintySummary s = run_mcdo(fixed_oracle(0.0), phantom_crop(), mc(McMode::Mcdo, 20));
  EXPECT_EQ(s.mad, 0.0);
  for (double x : s.variance_map.data()) ASSERT_EQ(x, 0.0);
  EXPECT_EQ(s.final_target, (Index3{32, 32, 32}));
}

TEST(Mcdo, JitterEnvelope) {
  const UncertaintySummary s = run_mcdo(fixed_oracle(1.0), phantom_crop(), mc(McMode::Mcdo, 100));
  EXPECT_GE(s.mad, 0.8);
  EXPECT_LE(s.mad, 2.0);
  EXPECT_EQ(s.argmax_positions.size(), 100u);
}

TEST(Mcdo, FailuresRaiseMad) {
  const double clean = run_mcdo(fixed_oracle(1.0), phantom_crop(), mc(McMode::Mcdo, 100)).mad;
  const double noisy = run_mcdo(fixed_oracle(1.0, 0.3), phantom_crop(), mc(McMode::Mcdo, 100)).mad;
  EXPECT_GT(noisy, clean);
}

TEST(Mcdo, ModeMismatchAndSampleCount) {
  EXPECT_THROW(run_mcdo(fixed_oracle(0.0), phantom_crop(), mc(McMode::Tta, 10)), InvalidArgument);
  EXPECT_THROW(run_mcdo(fixed_oracle(0.0), phantom_crop(), mc(McMode::Mcdo, 1)), InvalidArgument);
}

TEST(Mcdo, SamplingErrorCarriesIndex) {
  try {
    run_mcdo(FailsOnSeed(103), Volume3({4, 4, 4}, {1, 1, 1}, 0.5), mc(McMode::Mcdo, 10));
    FAIL() << "expected SamplingError";
  } catch (const SamplingError& e) {
    EXPECT_EQ(e.sample_index(), 3);
  }
}

TEST(Tta, IdentityPriorsGiveZeroMad) {
  McConfig c = mc(McMode::Tta, 10);
  c.priors = TransformPriors::identity();
  const UncertaintySummary s = run_tta(fixed_oracle(0.0), phantom_crop(), c);
  EXPECT_EQ(s.mad, 0.0);
}

TEST(Tta, TrackingOracleIsNearlyEquivariant) {
  const OracleLocalizer loc = OracleLocalizer::tracking(OracleLocalizerConfig{});
  const UncertaintySummary s = run_tta(loc, phantom_crop(), mc(McMode::Tta, 30));
  EXPECT_LE(s.mad, 1.5);
}

TEST(Tta, TranslationOnlyFloor) {
  McConfig c = mc(McMode::Tta, 30);
  c.priors.rotation_deg = {0.0, 0.0};
  c.priors.sample_curve = false;
  const OracleLocalizer loc = OracleLocalizer::tracking(OracleLocalizerConfig{});
  EXPECT_LE(run_tta(loc, phantom_crop(), c).mad, 0.75);
}

TEST(Tta, EchoCancelsSpatialTransform) {
  Volume3 v({48, 48, 48}, {1, 1, 1});
  for (int k = 0; k < 48; ++k)
    for (int j = 0; j < 48; ++j)
      for (int i = 0; i < 48; ++i) {
        const double r2 = (i - 23.5) * (i - 23.5) + (j - 23.5) * (j - 23.5) + (k - 23.5) * (k - 23.5);
        v(i, j, k) = 0.2 + 0.6 * std::exp(-r2 / (2 * 10.0 * 10.0));
      }
  McConfig c = mc(McMode::Tta, 8);
  c.keep_samples = true;
  const UncertaintySummary s = run_tta(EchoLocalizer{}, v, c);
  ASSERT_EQ(s.sample_heatmaps.size(), 8u);
  const Point3 pivot(23.5, 23.5, 23.5);
  for (int n = 0; n < 8; ++n) {
    const TransformPair pair = sample_transform(c.priors, c.base_seed + n, pivot);
    const RigidTransform inv = rigid_invert(pair.spatial);
    const Volume3 expect = intensity_apply_inverse(pair.intensity, v);
    double worst = 0.0;
    for (int k = 1; k < 47; ++k)
      for (int j = 1; j < 47; ++j)
        for (int i = 1; i < 47; ++i) {
          const Point3 src = inv.map(Point3(i, j, k));
          if ((src.array() < 1.0).any() || (src.array() > 46.0).any()) continue;
          worst = std::max(worst, std::abs(s.sample_heatmaps[n](i, j, k) - expect(i, j, k)));
        }
    EXPECT_LE(worst, 0.05) << n;
  }
}

TEST(Hybrid, ZeroJitterIdentityPriors) {
  McConfig c = mc(McMode::Hybrid, 10);
  c.priors = TransformPriors::identity();
  EXPECT_EQ(run_hybrid(fixed_oracle(0.0), phantom_crop(), c).mad, 0.0);
}

TEST(Hybrid, NoiseSourcesCompound) {
  OracleLocalizerConfig cfg;
  cfg.jitter_std = 1.0;
  const OracleLocalizer loc = OracleLocalizer::tracking(cfg);
  const double m = run_mcdo(loc, phantom_crop(), mc(McMode::Mcdo, 40)).mad;
  const double t = run_tta(loc, phantom_crop(), mc(McMode::Tta, 40)).mad;
  const double h = run_hybrid(loc, phantom_crop(), mc(McMode::Hybrid, 40)).mad;
  EXPECT_GE(h, std::max(m, t) - 0.5);
}

TEST(Summary, JsonAndMaps) {
  const UncertaintySummary s = run_mcdo(fixed_oracle(1.0), phantom_crop(), mc(McMode::Mcdo, 5));
  const nlohmann::json j = to_json(s);
  EXPECT_EQ(j.at("mode"), "mcdo");
  EXPECT_EQ(j.at("argmax_positions").size(), 5u);
  EXPECT_DOUBLE_EQ(j.at("mad").get<double>(), s.mad);

  const fs::path dir = fs::temp_directory_path() / "dbsloc_maps";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_summary_maps(s, dir / "right");
  EXPECT_EQ(read_volume(dir / "right_mean").dims(), s.mean_map.dims());
  EXPECT_TRUE(fs::exists(dir / "right_variance.raw"));
  fs::remove_all(dir);
}

TEST(Modes, ParseNames) {
  EXPECT_EQ(parse_mc_mode("hybrid"), McMode::Hybrid);
  EXPECT_EQ(to_string(McMode::Tta), "tta");
  EXPECT_FALSE(parse_mc_mode("baseline").has_value());
}
