#ifndef GESTALT_PREPROC_REGIONS_HPP_
#define GESTALT_PREPROC_REGIONS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gestalt/core/image.hpp"
#include "gestalt/preproc/landmarks.hpp"

namespace gestalt {

enum class RegionTag {
  full_face,
  eyes,
  nose,
  middle_face,
  upper_half,
  lower_half
};

inline constexpr std::array<RegionTag, 6> kAllRegions = {
    RegionTag::full_face,  RegionTag::eyes,       RegionTag::nose,
    RegionTag::middle_face, RegionTag::upper_half, RegionTag::lower_half};

inline const char* to_string(RegionTag t) {
  switch (t) {
    case RegionTag::full_face: return "full_face";
    case RegionTag::eyes: return "eyes";
    case RegionTag::nose: return "nose";
    case RegionTag::middle_face: return "middle_face";
    case RegionTag::upper_half: return "upper_half";
    case RegionTag::lower_half: return "lower_half";
  }
  return "?";
}

inline RegionTag region_from_string(const std::string& s) {
  for (RegionTag t : kAllRegions)
    if (s == to_string(t)) return t;
  throw DataError("unknown region tag: " + s);
}

/// Landmark-anchored crop rule. The crop box is the axis-aligned bounding
/// box of the anchor subset (all landmarks when `anchors` is empty),
/// expanded by margin_x/margin_y fractions of the inter-ocular distance.
/// upper/lower clips additionally cut the box at the vertical midpoint
/// between the eye line and the mouth line.
struct RegionSpec {
  RegionTag tag = RegionTag::full_face;
  std::vector<Anchor> anchors;  // empty = all landmarks
  double margin_x = 0.25;
  double margin_y = 0.25;
  enum class Clip { none, above_split, below_split } clip = Clip::none;
  int side = 100;

  void validate() const {
    if (margin_x < 0.0 || margin_y < 0.0)
      throw DegenerateGeometry("region margins must be >= 0");
    if (side <= 0) throw DegenerateGeometry("region side must be > 0");
  }
};

/// The six regions of the aggregated model with the documented default
/// margins. `side` is the output resolution of every crop.
inline std::vector<RegionSpec> default_region_specs(int side = 100) {
  using A = Anchor;
  using C = RegionSpec::Clip;
  std::vector<RegionSpec> specs;
  specs.push_back({RegionTag::full_face, {}, 0.25, 0.25, C::none, side});
  specs.push_back({RegionTag::eyes,
                   {A::left_eye, A::right_eye},
                   0.30, 0.35, C::none, side});
  specs.push_back({RegionTag::nose, {A::nose_tip}, 0.40, 0.50, C::none, side});
  specs.push_back({RegionTag::middle_face,
                   {A::left_ear, A::right_ear, A::left_eye, A::right_eye,
                    A::nose_tip},
                   0.10, 0.30, C::none, side});
  specs.push_back({RegionTag::upper_half, {}, 0.15, 0.15, C::above_split, side});
  specs.push_back({RegionTag::lower_half, {}, 0.15, 0.15, C::below_split, side});
  return specs;
}

/// One aligned grayscale region crop, side x side, values in [0, 1].
struct RegionCrop {
  RegionTag tag = RegionTag::full_face;
  int side = 0;
  std::vector<float> pixels;  // row-major

  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * side + x]; }
  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * side + x]; }
};

struct Box {
  double x0, y0, x1, y1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

/// Crop box for one spec given aligned landmarks; landmark coordinates are
/// clamped to the image bounds before the box is formed.
inline Box region_box(const LandmarkSet& lm, const RegionSpec& spec,
                      int img_w, int img_h) {
  spec.validate();
  const double iod = lm.interocular();
  if (!(iod > 0.0))
    throw DegenerateGeometry("region box: zero inter-ocular distance");
  std::vector<Vec2> pts;
  if (spec.anchors.empty()) {
    pts = lm.points;
  } else {
    for (Anchor a : spec.anchors) pts.push_back(lm.anchor(a));
  }
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (auto p : pts) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(img_w - 1));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(img_h - 1));
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  x0 -= spec.margin_x * iod;
  x1 += spec.margin_x * iod;
  y0 -= spec.margin_y * iod;
  y1 += spec.margin_y * iod;
  if (spec.clip != RegionSpec::Clip::none) {
    const double eye_line =
        0.5 * (lm.anchor(Anchor::left_eye).y + lm.anchor(Anchor::right_eye).y);
    const double split = 0.5 * (eye_line + lm.anchor(Anchor::mouth_center).y);
    if (spec.clip == RegionSpec::Clip::above_split)
      y1 = std::min(y1, split);
    else
      y0 = std::max(y0, split);
  }
  if (!(x1 > x0) || !(y1 > y0))
    throw DegenerateGeometry("region " + std::string(to_string(spec.tag)) +
                             ": anchor subset spans a zero-area box");
  return Box{x0, y0, x1, y1};
}

/// One RegionCrop per spec: grayscale, resampled to side x side with
/// bilinear interpolation (0 fill outside the image), clamped to [0, 1].
/// Pure function of its inputs; identical inputs give bit-identical crops.
inline std::vector<RegionCrop> generate_regions(
    const Image& aligned_image, const LandmarkSet& aligned_landmarks,
    const std::vector<RegionSpec>& specs) {
  if (aligned_image.empty())
    throw DegenerateGeometry("generate_regions: empty image");
  const Image gray = aligned_image.to_gray();
  std::vector<RegionCrop> crops;
  crops.reserve(specs.size());
  for (const auto& spec : specs) {
    const Box box = region_box(aligned_landmarks, spec, gray.width, gray.height);
    RegionCrop crop;
    crop.tag = spec.tag;
    crop.side = spec.side;
    crop.pixels.resize(static_cast<std::size_t>(spec.side) * spec.side);
    const double sx = box.width() / spec.side;
    const double sy = box.height() / spec.side;
    for (int i = 0; i < spec.side; ++i) {
      for (int j = 0; j < spec.side; ++j) {
        const double x = box.x0 + (j + 0.5) * sx - 0.5;
        const double y = box.y0 + (i + 0.5) * sy - 0.5;
        crop.at(i, j) = std::clamp(gray.sample(0, x, y), 0.0f, 1.0f);
      }
    }
    crops.push_back(std::move(crop));
  }
  return crops;
}

// Crop files: "GCROP1" magic, region tag, side, then side*side little-endian
// f32 pixels. Written by the preprocess command so later phases (or outside
// tooling) can consume crops without redoing alignment.
inline void save_crop(const std::string& path, const RegionCrop& crop) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write crop: " + path);
  out << "GCROP1 " << to_string(crop.tag) << " " << crop.side << "\n";
  out.write(reinterpret_cast<const char*>(crop.pixels.data()),
            static_cast<std::streamsize>(crop.pixels.size() * sizeof(float)));
}

inline RegionCrop load_crop(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open crop: " + path);
  std::string magic, tag;
  int side = 0;
  in >> magic >> tag >> side;
  if (magic != "GCROP1" || side <= 0)
    throw ParseError(path + ": not a crop file");
  in.get();
  RegionCrop crop;
  crop.tag = region_from_string(tag);
  crop.side = side;
  crop.pixels.resize(static_cast<std::size_t>(side) * side);
  in.read(reinterpret_cast<char*>(crop.pixels.data()),
          static_cast<std::streamsize>(crop.pixels.size() * sizeof(float)));
  if (in.gcount() !=
      static_cast<std::streamsize>(crop.pixels.size() * sizeof(float)))
    throw ParseError(path + ": truncated crop data");
  return crop;
}

}  // namespace gestalt

#endif  // GESTALT_PREPROC_REGIONS_HPP_
