#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dbsloc/errors.hpp"
#include "dbsloc/heatmap.hpp"
#include "dbsloc/volume.hpp"
#include "dbsloc/volume_io.hpp"

using namespace dbsloc;
namespace fs = std::filesystem;

namespace {

Volume3 random_volume(Index3 dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Volume3 v(dims, {1, 1, 1});
  for (double& x : v.data()) x = u(rng);
  return v;
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dbsloc_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Volume, RejectsBadGrids) {
  EXPECT_THROW(Volume3({0, 1, 1}, {1, 1, 1}), InvalidArgument);
  EXPECT_THROW(Volume3({1, 1, 1}, {1, 0, 1}), InvalidArgument);
  EXPECT_THROW(Volume3({2, 2, 2}, {1, 1, 1}, std::vector<double>(7)), InvalidArgument);
}

TEST(Volume, LinearIndexIsXFastest) {
  Volume3 v({3, 4, 5}, {1, 1, 1});
  EXPECT_EQ(v.linear_index(1, 0, 0), 1u);
  EXPECT_EQ(v.linear_index(0, 1, 0), 3u);
  EXPECT_EQ(v.linear_index(0, 0, 1), 12u);
  EXPECT_EQ(v.voxel_of(v.linear_index(2, 3, 4)), (Index3{2, 3, 4}));
}

TEST(Resample, UnitSpacingIsIdentity) {
  const Volume3 v = random_volume({6, 5, 4}, 1);
  const Volume3 out = resample_isotropic(v, 1.0);
  ASSERT_EQ(out.dims(), v.dims());
  for (std::size_t n = 0; n < v.size(); ++n) EXPECT_NEAR(out.data()[n], v.data()[n], 1e-12);
}

TEST(Resample, ConstantStaysConstant) {
  const Volume3 v({4, 4, 4}, {2, 2, 2}, 0.7);
  const Volume3 out = resample_isotropic(v, 1.0);
  EXPECT_EQ(out.dims(), (Index3{8, 8, 8}));
  for (double x : out.data()) EXPECT_NEAR(x, 0.7, 1e-15);
}

TEST(Resample, RampReproducedInInterior) {
  Volume3 v({8, 3, 3}, {2, 1, 1});
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 8; ++i) v(i, j, k) = i / 7.0;
  const Volume3 out = resample_isotropic(v, 1.0);
  ASSERT_EQ(out.dims(), (Index3{16, 3, 3}));
  // Output voxel i sits at input coordinate i/2; the last input voxel is 7.
  for (int i = 0; i <= 14; ++i) EXPECT_NEAR(out(i, 1, 1), (i / 2.0) / 7.0, 1e-9) << i;
}

TEST(RescaleIntensity, HandValues) {
  Volume3 v({3, 1, 1}, {1, 1, 1}, std::vector<double>{2, 4, 6});
  const Volume3 out = rescale_intensity(v);
  EXPECT_DOUBLE_EQ(out.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(out.data()[1], 0.5);
  EXPECT_DOUBLE_EQ(out.data()[2], 1.0);

  Volume3 unit({3, 1, 1}, {1, 1, 1}, std::vector<double>{0, 0.25, 1});
  EXPECT_EQ(rescale_intensity(unit), unit);

  Volume3 flat({2, 1, 1}, {1, 1, 1}, 5.0);
  const Volume3 zeros = rescale_intensity(flat);
  for (double x : zeros.data()) EXPECT_EQ(x, 0.0);
}

TEST(Downsample, SameDimsIsCopy) {
  const Volume3 v = random_volume({80, 80, 80}, 2);
  EXPECT_EQ(downsample_to(v, {80, 80, 80}), v);
}

TEST(Downsample, ConstantVolume) {
  const Volume3 v({160, 160, 160}, {1, 1, 1}, 0.25);
  const Volume3 out = downsample_to(v, {80, 80, 80});
  EXPECT_EQ(out.dims(), (Index3{80, 80, 80}));
  for (double x : out.data()) EXPECT_NEAR(x, 0.25, 1e-15);
}

TEST(Downsample, RampMatchesAnalytic) {
  Volume3 v({100, 100, 100}, {1, 1, 1});
  for (int k = 0; k < 100; ++k)
    for (int j = 0; j < 100; ++j)
      for (int i = 0; i < 100; ++i) v(i, j, k) = 0.01 * i + 0.002 * j - 0.003 * k;
  const Volume3 out = downsample_to(v, {80, 80, 80});
  const double s = 99.0 / 79.0;
  EXPECT_NEAR(out.spacing()[0], s, 1e-12);
  for (int k = 0; k < 80; k += 7)
    for (int j = 0; j < 80; j += 5)
      for (int i = 0; i < 80; i += 3) {
        const double expect = 0.01 * i * s + 0.002 * j * s - 0.003 * k * s;
        ASSERT_NEAR(out(i, j, k), expect, 1e-9);
      }
}

TEST(Crop, CenteredBlockIsExactCopy) {
  const Volume3 v = random_volume({128, 128, 128}, 3);
  const Volume3 c = crop_box(v, {{64, 64, 64}, {64, 64, 64}});
  for (int k = 0; k < 64; k += 9)
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) ASSERT_EQ(c(i, j, k), v(32 + i, 32 + j, 32 + k));
}

TEST(Crop, CornerMatchesZeroPaddedCopy) {
  const Volume3 v = random_volume({10, 10, 10}, 4);
  // Pad by 2 on every side, then take the 4^3 block starting at padded (0,0,0).
  Volume3 padded({14, 14, 14}, {1, 1, 1}, 0.0);
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 10; ++i) padded(i + 2, j + 2, k + 2) = v(i, j, k);
  const Volume3 c = crop_box(v, {{0, 0, 0}, {4, 4, 4}}, 0.0);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) EXPECT_EQ(c(i, j, k), padded(i, j, k));
  EXPECT_EQ(c(1, 1, 1), 0.0);
  EXPECT_EQ(c(2, 2, 2), v(0, 0, 0));
}

TEST(Crop, SingleVoxel) {
  const Volume3 v = random_volume({9, 9, 9}, 5);
  const Volume3 c = crop_box(v, {{3, 7, 2}, {1, 1, 1}});
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.data()[0], v(3, 7, 2));
}

TEST(Flip, Involution) {
  const Volume3 v = random_volume({7, 5, 3}, 6);
  EXPECT_EQ(flip_lr(flip_lr(v)), v);
}

TEST(Flip, ReflectsIndex) {
  Volume3 v({8, 8, 8}, {1, 1, 1});
  v(0, 3, 3) = 1.0;
  const Volume3 f = flip_lr(v);
  EXPECT_EQ(f(7, 3, 3), 1.0);
  EXPECT_EQ(flip_lr_index({0, 3, 3}, v.dims()), (Index3{7, 3, 3}));
}

TEST(Flip, ArgmaxReflects) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const Volume3 v = random_volume({11, 6, 5}, seed);
    EXPECT_EQ(argmax_position(flip_lr(v)), flip_lr_index(argmax_position(v), v.dims()));
  }
}

TEST(Sampling, ClampsOutside) {
  Volume3 v({2, 2, 2}, {1, 1, 1}, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7});
  EXPECT_EQ(sample_trilinear(v, Point3(-3, 0, 0)), 0.0);
  EXPECT_EQ(sample_trilinear(v, Point3(5, 5, 5)), 7.0);
  EXPECT_NEAR(sample_trilinear(v, Point3(0.5, 0.5, 0.5)), 3.5, 1e-15);
  EXPECT_EQ(sample_nearest(v, Point3(0.6, -1, 9)), 5.0);
}

TEST(VolumeIo, RoundTripAndHeader) {
  const fs::path dir = scratch_dir("io");
  Volume3 v({3, 4, 2}, {1.0, 0.5, 2.0});
  for (std::size_t n = 0; n < v.size(); ++n) v.data()[n] = 0.125 * static_cast<double>(n);
  write_volume(v, dir / "vol");
  EXPECT_EQ(fs::file_size(dir / "vol.raw"), 3u * 4u * 2u * 4u);

  std::ifstream h(dir / "vol.json");
  const nlohmann::json header = nlohmann::json::parse(h);
  EXPECT_EQ(header.at("dims"), nlohmann::json({3, 4, 2}));
  EXPECT_EQ(header.at("dtype"), "f32");
  EXPECT_EQ(header.at("order"), "x-fastest");
  EXPECT_EQ(header.at("axis0"), "LR");

  const Volume3 back = read_volume(dir / "vol");
  EXPECT_EQ(back, v);  // multiples of 1/8 are exact in float32
  fs::remove_all(dir);
}

TEST(VolumeIo, TruncatedPayloadIsIoError) {
  const fs::path dir = scratch_dir("io_trunc");
  write_volume(Volume3({4, 4, 4}, {1, 1, 1}, 0.5), dir / "vol");
  fs::resize_file(dir / "vol.raw", 100);
  EXPECT_THROW(read_volume(dir / "vol"), IoError);
  EXPECT_THROW(read_volume(dir / "missing"), IoError);
  fs::remove_all(dir);
}
