#ifndef GESTALT_NN_INIT_HPP_
#define GESTALT_NN_INIT_HPP_

#include <cmath>
#include <cstdint>

#include "gestalt/core/rng.hpp"
#include "gestalt/nn/tensor.hpp"

namespace gestalt {

/// Fan counts derived from the weight shape: conv (Cout,Cin,KH,KW) gives
/// fan_in = Cin*KH*KW and fan_out = Cout*KH*KW; fully connected (Out,In,1,1)
/// gives fan_in = In and fan_out = Out.
struct Fan {
  std::int64_t in;
  std::int64_t out;
};

inline Fan fan_of(int n, int c, int h, int w) {
  return Fan{static_cast<std::int64_t>(c) * h * w,
             static_cast<std::int64_t>(n) * h * w};
}

/// Zero-mean normal with variance 2/fan_in.
template <typename S>
Tensor4<S> init_he_normal(int n, int c, int h, int w, std::uint64_t seed) {
  if (n < 1 || c < 1 || h < 1 || w < 1)
    throw ShapeMismatch("init_he_normal: nonpositive dim");
  Tensor4<S> t(n, c, h, w);
  const Fan fan = fan_of(n, c, h, w);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan.in));
  Rng rng(seed);
  for (auto& v : t.v) v = S(rng.normal() * sd);
  return t;
}

/// Scaled Xavier normal: zero mean, variance scale * 2/(fan_in + fan_out).
/// The fine-tune head uses scale 0.3.
template <typename S>
Tensor4<S> init_xavier_modified(int n, int c, int h, int w, double scale,
                                std::uint64_t seed) {
  if (n < 1 || c < 1 || h < 1 || w < 1)
    throw ShapeMismatch("init_xavier_modified: nonpositive dim");
  if (scale < 0.0) throw InternalError("init scale must be >= 0");
  Tensor4<S> t(n, c, h, w);
  const Fan fan = fan_of(n, c, h, w);
  const double sd =
      std::sqrt(scale * 2.0 / static_cast<double>(fan.in + fan.out));
  Rng rng(seed);
  for (auto& v : t.v) v = S(rng.normal() * sd);
  return t;
}

}  // namespace gestalt

#endif  // GESTALT_NN_INIT_HPP_
