#ifndef GESTALT_DATAIO_AUGMENT_HPP_
#define GESTALT_DATAIO_AUGMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gestalt/core/error.hpp"
#include "gestalt/core/rng.hpp"
#include "gestalt/preproc/regions.hpp"

namespace gestalt {

/// Training-time augmentation ranges, generator-style semantics: every
/// parameter is drawn uniformly from its symmetric range, zoom range z
/// means a scale factor in [1-z, 1+z]. Identical seed and input give an
/// identical augmented output.
struct AugmentationPolicy {
  double rotation_deg = 5.0;
  double shift_frac = 0.05;   // of the crop side, both axes
  double shear_rad = 5.0 * 3.14159265358979323846 / 180.0;
  double zoom_frac = 0.05;
  bool horizontal_flip = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (rotation_deg < 0 || shift_frac < 0 || shear_rad < 0 || zoom_frac < 0)
      throw DataError("augmentation ranges must be >= 0");
  }

  static AugmentationPolicy none() {
    AugmentationPolicy p;
    p.rotation_deg = 0;
    p.shift_frac = 0;
    p.shear_rad = 0;
    p.zoom_frac = 0;
    p.horizontal_flip = false;
    return p;
  }
};

/// The values drawn for one augmentation; exposed so the samplers can be
/// tested statistically without warping anything.
struct AugmentParams {
  double rotation_rad = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  double shear_rad = 0.0;
  double zoom = 1.0;
  bool flip = false;
};

/// Draw order is fixed (rotation, shift x, shift y, shear, zoom, flip) so
/// streams stay reproducible when individual ranges are zero.
inline AugmentParams sample_augment_params(const AugmentationPolicy& policy,
                                           int side, Rng& rng) {
  policy.validate();
  AugmentParams p;
  const double rot = policy.rotation_deg * 3.14159265358979323846 / 180.0;
  p.rotation_rad = rng.uniform(-rot, rot);
  p.shift_x = rng.uniform(-policy.shift_frac, policy.shift_frac) * side;
  p.shift_y = rng.uniform(-policy.shift_frac, policy.shift_frac) * side;
  p.shear_rad = rng.uniform(-policy.shear_rad, policy.shear_rad);
  p.zoom = rng.uniform(1.0 - policy.zoom_frac, 1.0 + policy.zoom_frac);
  p.flip = policy.horizontal_flip && rng.bernoulli(0.5);
  return p;
}

namespace detail {

struct Affine2 {
  // forward map: (x', y') = (a x + b y + tx, c x + d y + ty)
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;

  Affine2 compose(const Affine2& o) const {  // this after o
    Affine2 r;
    r.a = a * o.a + b * o.c;
    r.b = a * o.b + b * o.d;
    r.c = c * o.a + d * o.c;
    r.d = c * o.b + d * o.d;
    r.tx = a * o.tx + b * o.ty + tx;
    r.ty = c * o.tx + d * o.ty + ty;
    return r;
  }

  Affine2 inverse() const {
    const double det = a * d - b * c;
    Affine2 r;
    r.a = d / det;
    r.b = -b / det;
    r.c = -c / det;
    r.d = a / det;
    r.tx = -(r.a * tx + r.b * ty);
    r.ty = -(r.c * tx + r.d * ty);
    return r;
  }
};

}  // namespace detail

/// Applies one drawn parameter set: rotation, translation, shear, zoom and
/// flip composed into a single affine warp about the crop center, one
/// bilinear resample, fill 0, clamp to [0, 1]. A parameter set drawn from
/// the all-zero policy reproduces the input bit-exactly.
inline RegionCrop apply_augment_params(const RegionCrop& crop,
                                       const AugmentParams& p) {
  using detail::Affine2;
  const int side = crop.side;
  const double cx = (side - 1) / 2.0, cy = (side - 1) / 2.0;
  Affine2 rot{std::cos(p.rotation_rad), -std::sin(p.rotation_rad),
              std::sin(p.rotation_rad), std::cos(p.rotation_rad), 0, 0};
  Affine2 shift{1, 0, 0, 1, p.shift_x, p.shift_y};
  Affine2 shear{1, -std::sin(p.shear_rad), 0, std::cos(p.shear_rad), 0, 0};
  Affine2 zoom{p.zoom, 0, 0, p.zoom, 0, 0};
  Affine2 flip{p.flip ? -1.0 : 1.0, 0, 0, 1, 0, 0};
  Affine2 m = rot.compose(shift).compose(shear).compose(zoom).compose(flip);
  // recenter: forward map about the crop center
  Affine2 to_center{1, 0, 0, 1, -cx, -cy};
  Affine2 from_center{1, 0, 0, 1, cx, cy};
  const Affine2 fwd = from_center.compose(m).compose(to_center);
  const Affine2 inv = fwd.inverse();

  RegionCrop out;
  out.tag = crop.tag;
  out.side = side;
  out.pixels.resize(crop.pixels.size());
  auto sample = [&](double x, double y) -> double {
    const double xf = std::floor(x), yf = std::floor(y);
    const int x0 = static_cast<int>(xf), y0 = static_cast<int>(yf);
    const double fx = x - xf, fy = y - yf;
    auto px = [&](int yy, int xx) -> double {
      if (xx < 0 || yy < 0 || xx >= side || yy >= side) return 0.0;
      return crop.at(yy, xx);
    };
    const double top = px(y0, x0) * (1 - fx) + px(y0, x0 + 1) * fx;
    const double bot = px(y0 + 1, x0) * (1 - fx) + px(y0 + 1, x0 + 1) * fx;
    return top * (1 - fy) + bot * fy;
  };
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double sx = inv.a * j + inv.b * i + inv.tx;
      const double sy = inv.c * j + inv.d * i + inv.ty;
      out.at(i, j) =
          static_cast<float>(std::clamp(sample(sx, sy), 0.0, 1.0));
    }
  }
  return out;
}

/// Random augmentation of one crop under the policy's own seed. Shape and
/// label are never touched; values stay in [0, 1].
inline RegionCrop augment(const RegionCrop& crop,
                          const AugmentationPolicy& policy) {
  Rng rng(policy.seed);
  const AugmentParams p = sample_augment_params(policy, crop.side, rng);
  return apply_augment_params(crop, p);
}

}  // namespace gestalt

#endif  // GESTALT_DATAIO_AUGMENT_HPP_
