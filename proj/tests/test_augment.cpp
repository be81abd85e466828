#include <catch2/catch_amalgamated.hpp>

#include "gestalt/dataio/augment.hpp"
#include "test_support.hpp"

using namespace gestalt;

namespace {

RegionCrop random_crop(int side, std::uint64_t seed) {
  RegionCrop crop;
  crop.tag = RegionTag::full_face;
  crop.side = side;
  crop.pixels.resize(static_cast<std::size_t>(side) * side);
  Rng rng(seed);
  for (auto& v : crop.pixels) v = static_cast<float>(rng.uniform());
  return crop;
}

}  // namespace

TEST_CASE("degenerate policy reproduces the crop bit-exactly") {
  const auto crop = random_crop(48, 1);
  auto policy = AugmentationPolicy::none();
  policy.seed = 123;
  const auto out = augment(crop, policy);
  REQUIRE(out.side == crop.side);
  REQUIRE(std::equal(out.pixels.begin(), out.pixels.end(), crop.pixels.begin()));
}

TEST_CASE("fixed seed gives bit-identical augmentation") {
  const auto crop = random_crop(64, 2);
  AugmentationPolicy policy;
  policy.seed = 777;
  const auto a = augment(crop, policy);
  const auto b = augment(crop, policy);
  REQUIRE(std::equal(a.pixels.begin(), a.pixels.end(), b.pixels.begin()));
  policy.seed = 778;
  const auto c = augment(crop, policy);
  REQUIRE(!std::equal(a.pixels.begin(), a.pixels.end(), c.pixels.begin()));
}

TEST_CASE("augmented crops keep shape and value range (property)") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto crop = random_crop(32, 900 + seed);
    AugmentationPolicy policy;
    policy.seed = seed;
    const auto out = augment(crop, policy);
    REQUIRE(out.side == crop.side);
    REQUIRE(out.tag == crop.tag);
    REQUIRE(out.pixels.size() == crop.pixels.size());
    for (float v : out.pixels) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
  }
}

TEST_CASE("rotation sampler stays in range with zero mean") {
  AugmentationPolicy policy;  // rotation range 5 degrees
  Rng rng(31337);
  const int draws = 1000;
  const double limit = 5.0 * 3.14159265358979 / 180.0;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_augment_params(policy, 100, rng);
    REQUIRE(p.rotation_rad >= -limit);
    REQUIRE(p.rotation_rad <= limit);
    sum += p.rotation_rad;
    sumsq += p.rotation_rad * p.rotation_rad;
  }
  const double mean = sum / draws;
  const double var = sumsq / draws - mean * mean;
  const double se = std::sqrt(var / draws);
  REQUIRE(std::abs(mean) < 3.0 * se);
}

TEST_CASE("zoom and shift samplers respect their ranges") {
  AugmentationPolicy policy;
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const auto p = sample_augment_params(policy, 100, rng);
    REQUIRE(p.zoom >= 0.95);
    REQUIRE(p.zoom <= 1.05);
    REQUIRE(std::abs(p.shift_x) <= 5.0);
    REQUIRE(std::abs(p.shift_y) <= 5.0);
    REQUIRE(std::abs(p.shear_rad) <= 5.0 * 3.14159265358979 / 180.0);
  }
}

TEST_CASE("pure horizontal flip mirrors columns") {
  const auto crop = random_crop(16, 5);
  AugmentParams p;
  p.flip = true;
  const auto out = apply_augment_params(crop, p);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      REQUIRE(out.at(y, x) == Catch::Approx(crop.at(y, 15 - x)).margin(1e-6));
}

TEST_CASE("pure integer shift translates the content") {
  const auto crop = random_crop(16, 6);
  AugmentParams p;
  p.shift_x = 2.0;
  const auto out = apply_augment_params(crop, p);
  for (int y = 0; y < 16; ++y)
    for (int x = 2; x < 16; ++x)
      REQUIRE(out.at(y, x) == Catch::Approx(crop.at(y, x - 2)).margin(1e-6));
}

TEST_CASE("negative ranges are rejected") {
  AugmentationPolicy policy;
  policy.rotation_deg = -1.0;
  const auto crop = random_crop(8, 7);
  REQUIRE_THROWS_AS(augment(crop, policy), DataError);
}
