#ifndef GESTALT_PREPROC_LANDMARKS_HPP_
#define GESTALT_PREPROC_LANDMARKS_HPP_

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"

namespace gestalt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Named anchors every schema must resolve. Region bounding rules and the
/// alignment sanity checks are written against anchors, never raw indices,
/// so the landmark count itself is configurable.
enum class Anchor {
  left_eye,
  right_eye,
  nose_tip,
  mouth_center,
  left_ear,
  right_ear,
  chin,
  forehead
};

inline constexpr std::array<Anchor, 8> kAllAnchors = {
    Anchor::left_eye,  Anchor::right_eye, Anchor::nose_tip,
    Anchor::mouth_center, Anchor::left_ear, Anchor::right_ear,
    Anchor::chin,      Anchor::forehead};

inline const char* to_string(Anchor a) {
  switch (a) {
    case Anchor::left_eye: return "left-eye-center";
    case Anchor::right_eye: return "right-eye-center";
    case Anchor::nose_tip: return "nose-tip";
    case Anchor::mouth_center: return "mouth-center";
    case Anchor::left_ear: return "left-ear";
    case Anchor::right_ear: return "right-ear";
    case Anchor::chin: return "chin";
    case Anchor::forehead: return "forehead-line";
  }
  return "?";
}

/// Landmark schema: a name, a point count, and the anchor index map.
///
/// Shipped schemas place the eight anchors at indices 0..7, followed by
/// free-form contour points:
///   synthetic8 - the 8 anchors only (synthetic data default)
///   face68     - anchors plus 60 contour points (real-data default)
///   face130    - anchors plus 122 contour points (full-scale layout)
struct LandmarkSchema {
  std::string name;
  int size = 0;
  std::map<Anchor, int> anchors;

  int anchor_index(Anchor a) const {
    auto it = anchors.find(a);
    if (it == anchors.end())
      throw DegenerateGeometry("schema " + name + " missing anchor " +
                               to_string(a));
    return it->second;
  }

  static LandmarkSchema with_prefix_anchors(const std::string& name, int size) {
    LandmarkSchema s;
    s.name = name;
    s.size = size;
    for (int i = 0; i < 8; ++i) s.anchors[kAllAnchors[i]] = i;
    return s;
  }

  static LandmarkSchema lookup(const std::string& name) {
    if (name == "synthetic8") return with_prefix_anchors(name, 8);
    if (name == "face68") return with_prefix_anchors(name, 68);
    if (name == "face130") return with_prefix_anchors(name, 130);
    throw DataError("unknown landmark schema: " + name);
  }
};

/// A full set of 2D landmarks under one schema. Coordinates are pixels,
/// x = column, y = row.
struct LandmarkSet {
  LandmarkSchema schema;
  std::vector<Vec2> points;

  LandmarkSet() = default;
  LandmarkSet(LandmarkSchema s, std::vector<Vec2> pts)
      : schema(std::move(s)), points(std::move(pts)) {
    validate();
  }

  void validate() const {
    if (static_cast<int>(points.size()) != schema.size)
      throw DegenerateGeometry("schema " + schema.name + " expects " +
                               std::to_string(schema.size) + " points, got " +
                               std::to_string(points.size()));
    for (const auto& [a, idx] : schema.anchors)
      if (idx < 0 || idx >= schema.size)
        throw DegenerateGeometry("anchor " + std::string(to_string(a)) +
                                 " index out of range");
    for (const auto& p : points)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw DegenerateGeometry("non-finite landmark coordinate");
  }

  Vec2 anchor(Anchor a) const { return points[schema.anchor_index(a)]; }

  Vec2 centroid() const {
    Vec2 c;
    for (const auto& p : points) {
      c.x += p.x;
      c.y += p.y;
    }
    c.x /= points.size();
    c.y /= points.size();
    return c;
  }

  double interocular() const {
    const Vec2 l = anchor(Anchor::left_eye);
    const Vec2 r = anchor(Anchor::right_eye);
    return std::hypot(r.x - l.x, r.y - l.y);
  }
};

/// One landmark annotation record: image path, schema name, flattened
/// coordinates (x0 y0 x1 y1 ...), whitespace separated. The canonical
/// template is stored in the same format with image path "-".
struct LandmarkRecord {
  std::string image_path;
  LandmarkSet landmarks;
};

inline LandmarkRecord read_landmark_record(std::istream& in,
                                           const std::string& where) {
  LandmarkRecord rec;
  std::string schema_name;
  if (!(in >> rec.image_path >> schema_name))
    throw ParseError(where + ": expected image path and schema name");
  LandmarkSchema schema = LandmarkSchema::lookup(schema_name);
  std::vector<Vec2> pts(schema.size);
  for (int i = 0; i < schema.size; ++i) {
    if (!(in >> pts[i].x >> pts[i].y))
      throw ParseError(where + ": expected " + std::to_string(schema.size) +
                       " coordinate pairs");
  }
  rec.landmarks = LandmarkSet(std::move(schema), std::move(pts));
  return rec;
}

inline LandmarkRecord load_landmark_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open landmark file: " + path);
  return read_landmark_record(in, path);
}

inline void write_landmark_record(std::ostream& out, const LandmarkRecord& rec) {
  out << (rec.image_path.empty() ? "-" : rec.image_path) << " "
      << rec.landmarks.schema.name;
  char buf[64];
  for (const auto& p : rec.landmarks.points) {
    std::snprintf(buf, sizeof(buf), " %.17g %.17g", p.x, p.y);
    out << buf;
  }
  out << "\n";
}

inline void save_landmark_file(const std::string& path,
                               const LandmarkRecord& rec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write landmark file: " + path);
  write_landmark_record(out, rec);
}

}  // namespace gestalt

#endif  // GESTALT_PREPROC_LANDMARKS_HPP_
