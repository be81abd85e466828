#ifndef GESTALT_PREPROC_ALIGN_HPP_
#define GESTALT_PREPROC_ALIGN_HPP_

#include <cmath>
#include <vector>

#include "gestalt/core/image.hpp"
#include "gestalt/core/parallel.hpp"
#include "gestalt/preproc/landmarks.hpp"

namespace gestalt {

/// Proper similarity transform p -> scale * R(rotation) * p + (tx, ty).
/// Reflections are deliberately excluded from estimation.
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;  // radians, counter-clockwise in (x right, y down)
  double tx = 0.0;
  double ty = 0.0;

  Vec2 apply(const Vec2& p) const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    return Vec2{scale * (c * p.x - s * p.y) + tx,
                scale * (s * p.x + c * p.y) + ty};
  }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = -rotation;
    const double c = std::cos(inv.rotation), s = std::sin(inv.rotation);
    inv.tx = -inv.scale * (c * tx - s * ty);
    inv.ty = -inv.scale * (s * tx + c * ty);
    return inv;
  }

  /// this ∘ other: applies other first.
  SimilarityTransform compose(const SimilarityTransform& other) const {
    SimilarityTransform out;
    out.scale = scale * other.scale;
    out.rotation = rotation + other.rotation;
    const Vec2 t = apply(Vec2{other.tx, other.ty});
    out.tx = t.x;
    out.ty = t.y;
    return out;
  }
};

inline LandmarkSet transform_landmarks(const LandmarkSet& lm,
                                       const SimilarityTransform& t) {
  LandmarkSet out = lm;
  for (auto& p : out.points) p = t.apply(p);
  return out;
}

/// Least-squares similarity transform mapping `from` onto `to`, the closed
/// form of the 2D Procrustes problem restricted to proper rotations:
///   theta = atan2(sum cross, sum dot), s = |(dot, cross)| / sum |a|^2
/// with sums over centered point pairs. The residual is the global minimum
/// of the similarity-constrained objective; point order does not matter.
inline SimilarityTransform estimate_alignment(const LandmarkSet& from,
                                              const LandmarkSet& to) {
  const std::size_t n = from.points.size();
  if (n != to.points.size() || from.schema.size != to.schema.size)
    throw DegenerateGeometry("alignment: schema size mismatch");
  if (n < 2) throw DegenerateGeometry("alignment needs at least 2 points");
  const Vec2 ca = from.centroid(), cb = to.centroid();
  double dot = 0.0, cross = 0.0, norm_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = from.points[i].x - ca.x, ay = from.points[i].y - ca.y;
    const double bx = to.points[i].x - cb.x, by = to.points[i].y - cb.y;
    dot += ax * bx + ay * by;
    cross += ax * by - ay * bx;
    norm_a += ax * ax + ay * ay;
  }
  if (norm_a <= 0.0)
    throw DegenerateGeometry("alignment: source landmarks coincide");
  const double mag = std::hypot(dot, cross);
  if (mag <= 0.0)
    throw DegenerateGeometry("alignment: target landmarks coincide");
  SimilarityTransform t;
  t.rotation = std::atan2(cross, dot);
  t.scale = mag / norm_a;
  const double c = std::cos(t.rotation), s = std::sin(t.rotation);
  t.tx = cb.x - t.scale * (c * ca.x - s * ca.y);
  t.ty = cb.y - t.scale * (s * ca.x + c * ca.y);
  return t;
}

/// Resamples the image under the transform: output pixel (x, y) reads the
/// source at T^-1(x, y) with bilinear interpolation, 0 fill outside. Output
/// canvas defaults to the input size.
inline Image apply_alignment(const Image& image, const SimilarityTransform& t,
                             int out_w = 0, int out_h = 0) {
  if (image.empty()) throw DegenerateGeometry("apply_alignment: empty image");
  if (!(t.scale > 0.0))
    throw DegenerateGeometry("apply_alignment: scale must be positive");
  if (out_w <= 0) out_w = image.width;
  if (out_h <= 0) out_h = image.height;
  Image out(out_w, out_h, image.channels);
  const SimilarityTransform inv = t.inverse();
  const double c = std::cos(inv.rotation), s = std::sin(inv.rotation);
  parallel_for(static_cast<std::int64_t>(out_h) * image.channels,
               [&](std::int64_t q) {
                 const int ch = static_cast<int>(q / out_h);
                 const int y = static_cast<int>(q % out_h);
                 for (int x = 0; x < out_w; ++x) {
                   const double sx = inv.scale * (c * x - s * y) + inv.tx;
                   const double sy = inv.scale * (s * x + c * y) + inv.ty;
                   out.at(ch, y, x) = image.sample(ch, sx, sy);
                 }
               });
  return out;
}

/// Mean shape after generalized Procrustes normalization: shapes are
/// iteratively aligned to the running mean, averaged, and renormalized.
/// The result is rescaled so the centroid sits at the canvas center and the
/// RMS landmark radius is `rms_fraction` of the canvas side. Frozen at
/// preprocessing time and stored with checkpoints.
inline LandmarkSet compute_canonical_template(
    const std::vector<LandmarkSet>& shapes, int canvas,
    double rms_fraction = 0.28, int iterations = 8) {
  if (shapes.empty())
    throw DegenerateGeometry("canonical template needs at least one shape");
  const int npts = shapes.front().schema.size;
  for (const auto& s : shapes)
    if (s.schema.size != npts)
      throw DegenerateGeometry("canonical template: mixed schema sizes");

  auto normalize = [&](LandmarkSet s) {
    const Vec2 ctr = s.centroid();
    double rms = 0.0;
    for (auto& p : s.points) {
      p.x -= ctr.x;
      p.y -= ctr.y;
      rms += p.x * p.x + p.y * p.y;
    }
    rms = std::sqrt(rms / s.points.size());
    if (rms <= 0.0)
      throw DegenerateGeometry("canonical template: degenerate shape");
    for (auto& p : s.points) {
      p.x /= rms;
      p.y /= rms;
    }
    return s;
  };

  LandmarkSet mean = normalize(shapes.front());
  for (int it = 0; it < iterations; ++it) {
    std::vector<Vec2> acc(npts);
    for (const auto& s : shapes) {
      const SimilarityTransform t = estimate_alignment(s, mean);
      for (int i = 0; i < npts; ++i) {
        const Vec2 p = t.apply(s.points[i]);
        acc[i].x += p.x;
        acc[i].y += p.y;
      }
    }
    for (auto& p : acc) {
      p.x /= shapes.size();
      p.y /= shapes.size();
    }
    mean = normalize(LandmarkSet(mean.schema, std::move(acc)));
  }

  // place into pixel coordinates of the aligned canvas
  const double target_rms = rms_fraction * canvas;
  const double cx = canvas / 2.0, cy = canvas / 2.0;
  for (auto& p : mean.points) {
    p.x = p.x * target_rms + cx;
    p.y = p.y * target_rms + cy;
  }
  return mean;
}

}  // namespace gestalt

#endif  // GESTALT_PREPROC_ALIGN_HPP_
