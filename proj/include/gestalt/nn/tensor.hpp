#ifndef GESTALT_NN_TENSOR_HPP_
#define GESTALT_NN_TENSOR_HPP_

#include <cassert>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"

namespace gestalt {

/// Dense NCHW tensor. Fully-connected activations use (n, features, 1, 1);
/// per-channel parameter vectors use (1, c, 1, 1).
template <typename S>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<S> v;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, S(0)) {}

  static Tensor4 vec(int c_) { return Tensor4(1, c_, 1, 1); }

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
  std::int64_t features() const {
    return static_cast<std::int64_t>(c) * h * w;
  }

  S& at(int i, int j, int y, int x) {
    return v[((static_cast<std::size_t>(i) * c + j) * h + y) * w + x];
  }
  S at(int i, int j, int y, int x) const {
    return v[((static_cast<std::size_t>(i) * c + j) * h + y) * w + x];
  }

  S* data() { return v.data(); }
  const S* data() const { return v.data(); }

  S* sample(int i) { return v.data() + static_cast<std::size_t>(i) * features(); }
  const S* sample(int i) const {
    return v.data() + static_cast<std::size_t>(i) * features();
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  std::string shape_str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }

  void fill(S x) { std::fill(v.begin(), v.end(), x); }

  void check_finite() const {
#ifndef NDEBUG
    for (S x : v) assert(std::isfinite(static_cast<double>(x)));
#endif
  }

  template <typename T>
  Tensor4<T> cast() const {
    Tensor4<T> out(n, c, h, w);
    for (std::size_t i = 0; i < v.size(); ++i)
      out.v[i] = static_cast<T>(v[i]);
    return out;
  }
};

template <typename S>
inline void require_same_shape(const Tensor4<S>& a, const Tensor4<S>& b,
                               const char* where) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(where) + ": " + a.shape_str() + " vs " +
                        b.shape_str());
}

}  // namespace gestalt

#endif  // GESTALT_NN_TENSOR_HPP_
