#include <catch2/catch_amalgamated.hpp>

#include "gestalt/preproc/regions.hpp"
#include "test_support.hpp"

#include <filesystem>

using namespace gestalt;
using gestalt_test::test_face_landmarks;

namespace {

Image noisy_face_canvas(int size, std::uint64_t seed) {
  Image img(size, size, 1);
  Rng rng(seed);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("six default regions, each side x side in [0,1]") {
  const auto lm = test_face_landmarks();
  const auto img = noisy_face_canvas(128, 3);
  const auto crops = generate_regions(img, lm, default_region_specs(100));
  REQUIRE(crops.size() == 6);
  for (const auto& crop : crops) {
    REQUIRE(crop.side == 100);
    REQUIRE(crop.pixels.size() == 100 * 100);
    for (float v : crop.pixels) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
  }
  // the six tags are exactly those of the aggregated model
  for (std::size_t i = 0; i < crops.size(); ++i)
    REQUIRE(crops[i].tag == kAllRegions[i]);
}

TEST_CASE("eyes box contains both eye anchors, nose box excludes them") {
  const auto lm = test_face_landmarks();
  const auto specs = default_region_specs(100);
  const Box eyes = region_box(lm, specs[1], 128, 128);
  const Box nose = region_box(lm, specs[2], 128, 128);
  const Vec2 le = lm.anchor(Anchor::left_eye), re = lm.anchor(Anchor::right_eye);
  auto contains = [](const Box& b, const Vec2& p) {
    return p.x >= b.x0 && p.x <= b.x1 && p.y >= b.y0 && p.y <= b.y1;
  };
  REQUIRE(contains(eyes, le));
  REQUIRE(contains(eyes, re));
  REQUIRE(!contains(nose, le));
  REQUIRE(!contains(nose, re));
  REQUIRE(contains(nose, lm.anchor(Anchor::nose_tip)));
}

TEST_CASE("full-face box contains every landmark") {
  const auto lm = test_face_landmarks();
  const Box box = region_box(lm, default_region_specs(100)[0], 128, 128);
  for (const auto& p : lm.points) {
    REQUIRE(p.x >= box.x0);
    REQUIRE(p.x <= box.x1);
    REQUIRE(p.y >= box.y0);
    REQUIRE(p.y <= box.y1);
  }
}

TEST_CASE("upper and lower halves split between eye line and mouth line") {
  const auto lm = test_face_landmarks();
  const auto specs = default_region_specs(100);
  const Box upper = region_box(lm, specs[4], 128, 128);
  const Box lower = region_box(lm, specs[5], 128, 128);
  const double eye_line = lm.anchor(Anchor::left_eye).y;
  const double mouth = lm.anchor(Anchor::mouth_center).y;
  const double split = 0.5 * (eye_line + mouth);
  REQUIRE(upper.y1 == Catch::Approx(split));
  REQUIRE(lower.y0 == Catch::Approx(split));
  REQUIRE(upper.y0 < eye_line);
  REQUIRE(lower.y1 > mouth);
}

TEST_CASE("full-face crop of an all-zeros image is all zeros") {
  const auto lm = test_face_landmarks();
  Image img(128, 128, 1);
  const auto crops = generate_regions(img, lm, default_region_specs(100));
  for (float v : crops[0].pixels) REQUIRE(v == 0.0f);
}

TEST_CASE("crops are deterministic") {
  const auto lm = test_face_landmarks();
  const auto img = noisy_face_canvas(128, 11);
  const auto a = generate_regions(img, lm, default_region_specs(100));
  const auto b = generate_regions(img, lm, default_region_specs(100));
  for (std::size_t i = 0; i < a.size(); ++i)
    REQUIRE(std::equal(a[i].pixels.begin(), a[i].pixels.end(),
                       b[i].pixels.begin()));
}

TEST_CASE("coincident anchors with zero margin are rejected") {
  auto lm = test_face_landmarks();
  RegionSpec spec;
  spec.tag = RegionTag::nose;
  spec.anchors = {Anchor::nose_tip};
  spec.margin_x = 0.0;
  spec.margin_y = 0.0;
  REQUIRE_THROWS_AS(region_box(lm, spec, 128, 128), DegenerateGeometry);
}

TEST_CASE("crops over random images stay bounded (property)") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto lm = test_face_landmarks();
    const auto img = noisy_face_canvas(128, 100 + seed);
    for (const auto& crop :
         generate_regions(img, lm, default_region_specs(64))) {
      REQUIRE(static_cast<int>(crop.pixels.size()) == crop.side * crop.side);
      for (float v : crop.pixels) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
      }
    }
  }
}

TEST_CASE("crop files round-trip bit-exactly") {
  const auto lm = test_face_landmarks();
  const auto img = noisy_face_canvas(128, 21);
  const auto crops = generate_regions(img, lm, default_region_specs(50));
  const auto path = std::filesystem::temp_directory_path() / "gestalt_crop_rt.gcr";
  save_crop(path.string(), crops[2]);
  const auto loaded = load_crop(path.string());
  REQUIRE(loaded.tag == crops[2].tag);
  REQUIRE(loaded.side == crops[2].side);
  REQUIRE(std::equal(loaded.pixels.begin(), loaded.pixels.end(),
                     crops[2].pixels.begin()));
  std::filesystem::remove(path);
}
