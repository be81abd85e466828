#include <catch2/catch_amalgamated.hpp>

#include "gestalt/preproc/align.hpp"
#include "test_support.hpp"

using namespace gestalt;
using gestalt_test::test_face_landmarks;

namespace {

LandmarkSet apply_to(const LandmarkSet& lm, const SimilarityTransform& t) {
  return transform_landmarks(lm, t);
}

// smooth grayscale test pattern; bilinear round-trips stay accurate on it
Image smooth_test_image(int size) {
  Image img(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      img.at(0, y, x) = static_cast<float>(
          0.5 + 0.25 * std::sin(2.0 * 3.14159265 * x / size) *
                    std::cos(2.0 * 3.14159265 * y / size) +
          0.2 * (x + y) / (2.0 * size));
  return img;
}

}  // namespace

TEST_CASE("alignment of identical landmark sets is the identity") {
  const auto lm = test_face_landmarks();
  const auto t = estimate_alignment(lm, lm);
  REQUIRE(t.scale == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(t.rotation == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(t.tx == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(t.ty == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("alignment recovers a pure rotation about the centroid") {
  const auto canonical = test_face_landmarks();
  const Vec2 c = canonical.centroid();
  SimilarityTransform rot;
  rot.rotation = 0.3;
  // rotate about centroid: conjugate with centroid translation
  SimilarityTransform to_origin{1.0, 0.0, -c.x, -c.y};
  SimilarityTransform back{1.0, 0.0, c.x, c.y};
  const auto t_fwd = back.compose(rot.compose(to_origin));
  const auto rotated = apply_to(canonical, t_fwd);

  const auto est = estimate_alignment(rotated, canonical);
  REQUIRE(est.rotation == Catch::Approx(-0.3).margin(1e-9));
  REQUIRE(est.scale == Catch::Approx(1.0).margin(1e-9));
  double residual = 0.0;
  for (std::size_t i = 0; i < canonical.points.size(); ++i) {
    const Vec2 p = est.apply(rotated.points[i]);
    residual += std::hypot(p.x - canonical.points[i].x,
                           p.y - canonical.points[i].y);
  }
  REQUIRE(residual < 1e-9);
}

TEST_CASE("alignment inverts scale and shift") {
  const auto canonical = test_face_landmarks();
  SimilarityTransform t_fwd{2.0, 0.0, 10.0, -5.0};
  const auto moved = apply_to(canonical, t_fwd);
  const auto est = estimate_alignment(moved, canonical);
  REQUIRE(est.scale == Catch::Approx(0.5).margin(1e-12));
  double residual = 0.0;
  for (std::size_t i = 0; i < canonical.points.size(); ++i) {
    const Vec2 p = est.apply(moved.points[i]);
    residual += std::hypot(p.x - canonical.points[i].x,
                           p.y - canonical.points[i].y);
  }
  REQUIRE(residual < 1e-9);
}

TEST_CASE("alignment recovers random similarity transforms to 1e-6") {
  const auto canonical = test_face_landmarks();
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    SimilarityTransform t;
    t.scale = 0.5 + rng.uniform() * 2.0;
    t.rotation = rng.uniform(-3.0, 3.0);
    t.tx = rng.uniform(-40.0, 40.0);
    t.ty = rng.uniform(-40.0, 40.0);
    const auto moved = apply_to(canonical, t);
    const auto est = estimate_alignment(moved, canonical);
    const auto inv = t.inverse();
    REQUIRE(std::abs(est.scale - inv.scale) < 1e-6);
    double dr = std::remainder(est.rotation - inv.rotation, 2 * 3.14159265358979);
    REQUIRE(std::abs(dr) < 1e-6);
    REQUIRE(std::abs(est.tx - inv.tx) < 1e-6);
    REQUIRE(std::abs(est.ty - inv.ty) < 1e-6);
  }
}

TEST_CASE("alignment is invariant to point enumeration order") {
  const auto canonical = test_face_landmarks();
  SimilarityTransform t{1.4, 0.7, 3.0, 8.0};
  const auto moved = apply_to(canonical, t);
  const auto est = estimate_alignment(moved, canonical);

  // same pairs, permuted consistently
  std::vector<std::size_t> perm = {5, 2, 7, 0, 3, 6, 1, 4};
  std::vector<Vec2> a2, b2;
  for (auto i : perm) {
    a2.push_back(moved.points[i]);
    b2.push_back(canonical.points[i]);
  }
  const LandmarkSchema schema = LandmarkSchema::lookup("synthetic8");
  const auto est2 = estimate_alignment(LandmarkSet(schema, a2),
                                       LandmarkSet(schema, b2));
  REQUIRE(est.scale == Catch::Approx(est2.scale).margin(1e-12));
  REQUIRE(est.rotation == Catch::Approx(est2.rotation).margin(1e-12));
  REQUIRE(est.tx == Catch::Approx(est2.tx).margin(1e-9));
  REQUIRE(est.ty == Catch::Approx(est2.ty).margin(1e-9));
}

TEST_CASE("alignment rejects degenerate geometry") {
  const LandmarkSchema schema = LandmarkSchema::lookup("synthetic8");
  std::vector<Vec2> coincident(8, Vec2{5.0, 5.0});
  const LandmarkSet bad(schema, coincident);
  const auto good = test_face_landmarks();
  REQUIRE_THROWS_AS(estimate_alignment(bad, good), DegenerateGeometry);
  REQUIRE_THROWS_AS(estimate_alignment(good, bad), DegenerateGeometry);
}

TEST_CASE("transform composed with its inverse is the identity") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    SimilarityTransform t;
    t.scale = 0.2 + rng.uniform() * 4.0;
    t.rotation = rng.uniform(-3.1, 3.1);
    t.tx = rng.uniform(-100.0, 100.0);
    t.ty = rng.uniform(-100.0, 100.0);
    const auto id = t.compose(t.inverse());
    REQUIRE(std::abs(id.scale - 1.0) < 1e-9);
    REQUIRE(std::abs(id.rotation) < 1e-9);
    REQUIRE(std::abs(id.tx) < 1e-9);
    REQUIRE(std::abs(id.ty) < 1e-9);
  }
}

TEST_CASE("identity warp reproduces the image bit-exactly") {
  const auto img = smooth_test_image(64);
  const auto out = apply_alignment(img, SimilarityTransform{});
  REQUIRE(std::equal(img.data.begin(), img.data.end(), out.data.begin()));
}

TEST_CASE("integer translation shifts pixels exactly") {
  const auto img = smooth_test_image(32);
  SimilarityTransform t{1.0, 0.0, 3.0, -2.0};
  const auto out = apply_alignment(img, t);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const int sx = x - 3, sy = y + 2;
      const float expect =
          (sx >= 0 && sx < 32 && sy >= 0 && sy < 32) ? img.at(0, sy, sx) : 0.0f;
      REQUIRE(out.at(0, y, x) == expect);
    }
  }
}

TEST_CASE("rotation round trip stays within the resampling bound") {
  const int size = 96;
  const auto img = smooth_test_image(size);
  const double cx = (size - 1) / 2.0;
  auto about_center = [&](double angle) {
    SimilarityTransform rot{1.0, angle, 0.0, 0.0};
    SimilarityTransform fwd = rot;
    const Vec2 rc = rot.apply(Vec2{cx, cx});
    fwd.tx = cx - rc.x;
    fwd.ty = cx - rc.y;
    return fwd;
  };
  const auto once = apply_alignment(img, about_center(0.2));
  const auto back = apply_alignment(once, about_center(-0.2));
  // interior region: stay clear of the fill boundary
  const int m = 16;
  for (int y = m; y < size - m; ++y)
    for (int x = m; x < size - m; ++x)
      REQUIRE(std::abs(back.at(0, y, x) - img.at(0, y, x)) < 0.02);
}

TEST_CASE("apply_alignment rejects non-positive scale") {
  const auto img = smooth_test_image(16);
  SimilarityTransform t;
  t.scale = 0.0;
  REQUIRE_THROWS_AS(apply_alignment(img, t), DegenerateGeometry);
}

TEST_CASE("canonical template centers the mean shape on the canvas") {
  Rng rng(77);
  std::vector<LandmarkSet> shapes;
  for (int i = 0; i < 12; ++i) {
    SimilarityTransform t;
    t.scale = 0.8 + rng.uniform() * 0.5;
    t.rotation = rng.uniform(-0.2, 0.2);
    t.tx = rng.uniform(-10.0, 10.0);
    t.ty = rng.uniform(-10.0, 10.0);
    auto s = apply_to(test_face_landmarks(), t);
    for (auto& p : s.points) {
      p.x += rng.normal() * 0.5;
      p.y += rng.normal() * 0.5;
    }
    shapes.push_back(std::move(s));
  }
  const int canvas = 128;
  const auto tmpl = compute_canonical_template(shapes, canvas);
  const Vec2 c = tmpl.centroid();
  REQUIRE(c.x == Catch::Approx(canvas / 2.0).margin(1e-6));
  REQUIRE(c.y == Catch::Approx(canvas / 2.0).margin(1e-6));
  double rms = 0.0;
  for (const auto& p : tmpl.points)
    rms += (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
  rms = std::sqrt(rms / tmpl.points.size());
  REQUIRE(rms == Catch::Approx(0.28 * canvas).margin(1e-6));
  // anatomy preserved: eyes above mouth, left eye left of right eye
  REQUIRE(tmpl.anchor(Anchor::left_eye).x < tmpl.anchor(Anchor::right_eye).x);
  REQUIRE(tmpl.anchor(Anchor::left_eye).y < tmpl.anchor(Anchor::mouth_center).y);
}
