#ifndef GESTALT_TESTS_TEST_SUPPORT_HPP_
#define GESTALT_TESTS_TEST_SUPPORT_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gestalt/core/rng.hpp"
#include "gestalt/nn/tensor.hpp"
#include "gestalt/preproc/landmarks.hpp"

namespace gestalt_test {

template <typename S>
gestalt::Tensor4<S> random_tensor(int n, int c, int h, int w,
                                  std::uint64_t seed, double scale = 1.0) {
  gestalt::Tensor4<S> t(n, c, h, w);
  gestalt::Rng rng(seed);
  for (auto& v : t.v) v = S(rng.normal() * scale);
  return t;
}

/// Central finite difference of a scalar-valued rebuildable loss with
/// respect to one storage location.
inline double central_diff(const std::function<double()>& loss, double* elem,
                           double h = 1e-5) {
  const double orig = *elem;
  *elem = orig + h;
  const double lp = loss();
  *elem = orig - h;
  const double lm = loss();
  *elem = orig;
  return (lp - lm) / (2.0 * h);
}

/// Norm-based relative error between an analytic gradient and its
/// finite-difference estimate over a whole tensor.
inline double grad_rel_error(const std::function<double()>& loss,
                             std::vector<double>& storage,
                             const std::vector<double>& analytic,
                             double h = 1e-5) {
  double num = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < storage.size(); ++i) {
    const double fd = central_diff(loss, &storage[i], h);
    const double d = analytic[i] - fd;
    num += d * d;
    na += analytic[i] * analytic[i];
    nn += fd * fd;
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  if (denom < 1e-12) return std::sqrt(num);  // both ~zero: absolute
  return std::sqrt(num) / denom;
}

/// Fixed loss projection sum(r .* y) with a deterministic r; its gradient
/// w.r.t. y is exactly r, which backward routines consume as dy.
template <typename S>
gestalt::Tensor4<S> projection(const gestalt::Tensor4<S>& like,
                               std::uint64_t seed) {
  return random_tensor<S>(like.n, like.c, like.h, like.w, seed);
}

template <typename S>
double project(const gestalt::Tensor4<S>& y, const gestalt::Tensor4<S>& r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.v.size(); ++i)
    acc += static_cast<double>(y.v[i]) * static_cast<double>(r.v[i]);
  return acc;
}

/// A small face-like landmark layout used across the preprocessing tests
/// (anchors at indices 0..7 per the synthetic8 schema).
inline gestalt::LandmarkSet test_face_landmarks(int canvas = 128) {
  using gestalt::Vec2;
  const double s = canvas / 128.0;
  std::vector<Vec2> pts = {
      {44 * s, 52 * s},   // left eye
      {84 * s, 52 * s},   // right eye
      {64 * s, 76 * s},   // nose tip
      {64 * s, 94 * s},   // mouth center
      {22 * s, 64 * s},   // left ear
      {106 * s, 64 * s},  // right ear
      {64 * s, 114 * s},  // chin
      {64 * s, 22 * s},   // forehead
  };
  return gestalt::LandmarkSet(
      gestalt::LandmarkSchema::lookup("synthetic8"), std::move(pts));
}

}  // namespace gestalt_test

#endif  // GESTALT_TESTS_TEST_SUPPORT_HPP_
