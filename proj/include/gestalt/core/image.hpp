#ifndef GESTALT_CORE_IMAGE_HPP_
#define GESTALT_CORE_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"

namespace gestalt {

/// Planar floating-point image, values in [0, 1]. channels is 1 (gray) or
/// 3 (RGB). Disk formats are binary PGM (P5) and PPM (P6) with maxval 255.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;  // [c][y][x]

  Image() = default;
  Image(int w, int h, int c = 1)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  bool empty() const { return width <= 0 || height <= 0; }

  Image to_gray() const {
    if (channels == 1) return *this;
    Image g(width, height, 1);
    const std::size_t plane = static_cast<std::size_t>(width) * height;
    for (std::size_t i = 0; i < plane; ++i) {
      g.data[i] = 0.299f * data[i] + 0.587f * data[plane + i] +
                  0.114f * data[2 * plane + i];
    }
    return g;
  }

  /// Bilinear sample of channel c at (x, y); out-of-bounds reads fill 0.
  float sample(int c, double x, double y) const {
    const double x0f = std::floor(x);
    const double y0f = std::floor(y);
    const int x0 = static_cast<int>(x0f);
    const int y0 = static_cast<int>(y0f);
    const double fx = x - x0f;
    const double fy = y - y0f;
    auto px = [&](int yy, int xx) -> double {
      if (xx < 0 || yy < 0 || xx >= width || yy >= height) return 0.0;
      return at(c, yy, xx);
    };
    const double top = px(y0, x0) * (1.0 - fx) + px(y0, x0 + 1) * fx;
    const double bot = px(y0 + 1, x0) * (1.0 - fx) + px(y0 + 1, x0 + 1) * fx;
    return static_cast<float>(top * (1.0 - fy) + bot * fy);
  }

  /// FNV-1a over the 8-bit quantized grayscale pixels. Used for duplicate
  /// detection, so it must depend on decoded content, not file bytes.
  std::uint64_t content_hash() const {
    Image g = to_gray();
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](std::uint8_t b) {
      h ^= b;
      h *= 1099511628211ULL;
    };
    feed(static_cast<std::uint8_t>(g.width & 0xff));
    feed(static_cast<std::uint8_t>((g.width >> 8) & 0xff));
    feed(static_cast<std::uint8_t>(g.height & 0xff));
    feed(static_cast<std::uint8_t>((g.height >> 8) & 0xff));
    for (float v : g.data) feed(quantize(v));
    return h;
  }

  static std::uint8_t quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
  }

  static Image load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6")
      throw ParseError(path + ": unsupported image format '" + magic +
                       "' (expected binary PGM/PPM)");
    int w = 0, h = 0, maxval = 0;
    auto next_int = [&in, &path]() {
      // skip whitespace and '#' comment lines between header fields
      int ch;
      while ((ch = in.peek()) != EOF) {
        if (ch == '#') {
          std::string line;
          std::getline(in, line);
        } else if (std::isspace(ch)) {
          in.get();
        } else {
          break;
        }
      }
      int v;
      if (!(in >> v)) throw ParseError(path + ": truncated header");
      return v;
    };
    w = next_int();
    h = next_int();
    maxval = next_int();
    if (maxval != 255) throw ParseError(path + ": only maxval 255 supported");
    in.get();  // single whitespace after maxval
    const int c = magic == "P5" ? 1 : 3;
    Image img(w, h, c);
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * c);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw ParseError(path + ": truncated pixel data");
    // interleaved on disk, planar in memory
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    for (std::size_t i = 0; i < plane; ++i)
      for (int ch = 0; ch < c; ++ch)
        img.data[ch * plane + i] = raw[i * c + ch] / 255.0f;
    return img;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image: " + path);
    out << (channels == 1 ? "P5" : "P6") << "\n"
        << width << " " << height << "\n255\n";
    const std::size_t plane = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> raw(plane * channels);
    for (std::size_t i = 0; i < plane; ++i)
      for (int ch = 0; ch < channels; ++ch)
        raw[i * channels + ch] = quantize(data[ch * plane + i]);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("short write: " + path);
  }
};

}  // namespace gestalt

#endif  // GESTALT_CORE_IMAGE_HPP_
