#ifndef GESTALT_NN_LAYERS_HPP_
#define GESTALT_NN_LAYERS_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gestalt/core/parallel.hpp"
#include "gestalt/core/rng.hpp"
#include "gestalt/nn/tensor.hpp"

namespace gestalt {

enum class Mode { train, infer };

namespace detail {

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapM = Eigen::Map<MatRM<S>>;
template <typename S>
using CMapM = Eigen::Map<const MatRM<S>>;

template <typename S>
std::vector<S>& conv_scratch() {
  static thread_local std::vector<S> buf;
  return buf;
}

// Unrolls one sample into a (Cin*KH*KW) x (OH*OW) patch matrix.
template <typename S>
void im2col(const S* x, int cin, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, S* col) {
  for (int c = 0; c < cin; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        S* row = col + ((static_cast<std::size_t>(c) * kh + ky) * kw + kx) *
                           (static_cast<std::size_t>(oh) * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            row[static_cast<std::size_t>(oy) * ow + ox] =
                (iy >= 0 && iy < h && ix >= 0 && ix < w)
                    ? x[(static_cast<std::size_t>(c) * h + iy) * w + ix]
                    : S(0);
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back into a sample gradient.
template <typename S>
void col2im_add(const S* col, int cin, int h, int w, int kh, int kw,
                int stride, int pad, int oh, int ow, S* dx) {
  for (int c = 0; c < cin; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const S* row = col + ((static_cast<std::size_t>(c) * kh + ky) * kw + kx) *
                                 (static_cast<std::size_t>(oh) * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            dx[(static_cast<std::size_t>(c) * h + iy) * w + ix] +=
                row[static_cast<std::size_t>(oy) * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution (cross-correlation), stride/padding symmetric in both axes.

template <typename S>
Tensor4<S> conv2d_forward(const Tensor4<S>& x, const Tensor4<S>& w,
                          const Tensor4<S>& b, int stride, int pad) {
  if (w.c != x.c)
    throw ShapeMismatch("conv2d: input channels " + std::to_string(x.c) +
                        " vs kernel " + std::to_string(w.c));
  if (b.size() != w.n) throw ShapeMismatch("conv2d: bias length");
  const int oh = (x.h + 2 * pad - w.h) / stride + 1;
  const int ow = (x.w + 2 * pad - w.w) / stride + 1;
  if (oh < 1 || ow < 1)
    throw ShapeMismatch("conv2d: kernel exceeds padded input");
  const int kdim = w.c * w.h * w.w;
  const std::int64_t ohw = static_cast<std::int64_t>(oh) * ow;
  Tensor4<S> y(x.n, w.n, oh, ow);
  parallel_for(x.n, [&](std::int64_t i) {
    auto& col = detail::conv_scratch<S>();
    col.resize(static_cast<std::size_t>(kdim) * ohw);
    detail::im2col(x.sample(static_cast<int>(i)), x.c, x.h, x.w, w.h, w.w,
                   stride, pad, oh, ow, col.data());
    detail::CMapM<S> wm(w.data(), w.n, kdim);
    detail::CMapM<S> cm(col.data(), kdim, ohw);
    detail::MapM<S> ym(y.sample(static_cast<int>(i)), w.n, ohw);
    ym.noalias() = wm * cm;
    for (int oc = 0; oc < w.n; ++oc) ym.row(oc).array() += b.v[oc];
  });
  return y;
}

template <typename S>
void conv2d_backward(const Tensor4<S>& x, const Tensor4<S>& w,
                     const Tensor4<S>& dy, int stride, int pad, Tensor4<S>* dx,
                     Tensor4<S>* dw, Tensor4<S>* db) {
  const int oh = dy.h, ow = dy.w;
  const int kdim = w.c * w.h * w.w;
  const std::int64_t ohw = static_cast<std::int64_t>(oh) * ow;
  if (dy.n != x.n || dy.c != w.n) throw ShapeMismatch("conv2d_backward: dy");
  *dx = Tensor4<S>(x.n, x.c, x.h, x.w);
  // Per-sample weight-gradient partials, reduced in sample order afterwards,
  // so the result is bit-identical for any worker count.
  std::vector<std::vector<S>> dw_part(x.n);
  std::vector<std::vector<S>> db_part(x.n);
  parallel_for(x.n, [&](std::int64_t i) {
    auto& col = detail::conv_scratch<S>();
    col.resize(static_cast<std::size_t>(kdim) * ohw);
    detail::im2col(x.sample(static_cast<int>(i)), x.c, x.h, x.w, w.h, w.w,
                   stride, pad, oh, ow, col.data());
    detail::CMapM<S> dym(dy.sample(static_cast<int>(i)), w.n, ohw);
    detail::CMapM<S> cm(col.data(), kdim, ohw);
    dw_part[i].resize(static_cast<std::size_t>(w.n) * kdim);
    detail::MapM<S> dwm(dw_part[i].data(), w.n, kdim);
    dwm.noalias() = dym * cm.transpose();
    db_part[i].resize(w.n);
    for (int oc = 0; oc < w.n; ++oc) db_part[i][oc] = dym.row(oc).sum();
    // reuse col as dcol for the input gradient
    detail::CMapM<S> wm(w.data(), w.n, kdim);
    detail::MapM<S> dcm(col.data(), kdim, ohw);
    dcm.noalias() = wm.transpose() * dym;
    detail::col2im_add(col.data(), x.c, x.h, x.w, w.h, w.w, stride, pad, oh,
                       ow, dx->sample(static_cast<int>(i)));
  });
  *dw = Tensor4<S>(w.n, w.c, w.h, w.w);
  *db = Tensor4<S>::vec(w.n);
  for (int i = 0; i < x.n; ++i) {
    for (std::size_t k = 0; k < dw->v.size(); ++k) dw->v[k] += dw_part[i][k];
    for (int oc = 0; oc < w.n; ++oc) db->v[oc] += db_part[i][oc];
  }
}

// ---------------------------------------------------------------------------
// Batch normalization, per channel over (N, H, W).

template <typename S>
struct BatchNormParams {
  Tensor4<S> gamma, beta;              // learnable
  Tensor4<S> running_mean, running_var;  // inference statistics (biased var)
  S momentum = S(0.9);
  S eps = S(1e-5);

  explicit BatchNormParams(int channels = 0)
      : gamma(Tensor4<S>::vec(channels)), beta(Tensor4<S>::vec(channels)),
        running_mean(Tensor4<S>::vec(channels)),
        running_var(Tensor4<S>::vec(channels)) {
    gamma.fill(S(1));
  }
};

template <typename S>
struct BatchNormCache {
  Tensor4<S> xhat;
  std::vector<S> inv_std;  // per channel
};

/// Train mode normalizes with batch statistics and folds them into the
/// running estimates: running = momentum * running + (1 - momentum) * batch.
/// Infer mode is a fixed affine map using the running statistics.
template <typename S>
Tensor4<S> batchnorm_forward(const Tensor4<S>& x, BatchNormParams<S>& p,
                             Mode mode, BatchNormCache<S>* cache = nullptr) {
  if (p.gamma.size() != x.c) throw ShapeMismatch("batchnorm: channel count");
  Tensor4<S> y(x.n, x.c, x.h, x.w);
  const std::int64_t plane = static_cast<std::int64_t>(x.h) * x.w;
  const std::int64_t m = static_cast<std::int64_t>(x.n) * plane;
  const std::int64_t feat = x.features();
  if (mode == Mode::infer) {
    parallel_for(x.c, [&](std::int64_t c) {
      const S inv = S(1) / std::sqrt(p.running_var.v[c] + p.eps);
      const S g = p.gamma.v[c] * inv, b = p.beta.v[c],
              mu = p.running_mean.v[c];
      for (int i = 0; i < x.n; ++i) {
        const S* xs = x.sample(i) + c * plane;
        S* ys = y.sample(i) + c * plane;
        for (std::int64_t k = 0; k < plane; ++k) ys[k] = g * (xs[k] - mu) + b;
      }
    });
    return y;
  }
  if (x.n < 2)
    throw DegenerateBatch("batchnorm train mode needs batch >= 2, got " +
                          std::to_string(x.n));
  if (cache) {
    cache->xhat = Tensor4<S>(x.n, x.c, x.h, x.w);
    cache->inv_std.assign(x.c, S(0));
  }
  (void)feat;
  parallel_for(x.c, [&](std::int64_t c) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < x.n; ++i) {
      const S* xs = x.sample(i) + c * plane;
      for (std::int64_t k = 0; k < plane; ++k) {
        sum += xs[k];
        sq += static_cast<double>(xs[k]) * xs[k];
      }
    }
    const double mean = sum / m;
    const double var = std::max(0.0, sq / m - mean * mean);
    const S inv = S(1.0 / std::sqrt(var + static_cast<double>(p.eps)));
    const S g = p.gamma.v[c], b = p.beta.v[c], mu = S(mean);
    for (int i = 0; i < x.n; ++i) {
      const S* xs = x.sample(i) + c * plane;
      S* ys = y.sample(i) + c * plane;
      S* xh = cache ? cache->xhat.sample(i) + c * plane : nullptr;
      for (std::int64_t k = 0; k < plane; ++k) {
        const S xhat = (xs[k] - mu) * inv;
        if (xh) xh[k] = xhat;
        ys[k] = g * xhat + b;
      }
    }
    if (cache) cache->inv_std[c] = inv;
    p.running_mean.v[c] =
        p.momentum * p.running_mean.v[c] + (S(1) - p.momentum) * S(mean);
    p.running_var.v[c] =
        p.momentum * p.running_var.v[c] + (S(1) - p.momentum) * S(var);
  });
  return y;
}

template <typename S>
void batchnorm_backward(const Tensor4<S>& dy, const BatchNormCache<S>& cache,
                        const BatchNormParams<S>& p, Tensor4<S>* dx,
                        Tensor4<S>* dgamma, Tensor4<S>* dbeta) {
  require_same_shape(dy, cache.xhat, "batchnorm_backward");
  *dx = Tensor4<S>(dy.n, dy.c, dy.h, dy.w);
  *dgamma = Tensor4<S>::vec(dy.c);
  *dbeta = Tensor4<S>::vec(dy.c);
  const std::int64_t plane = static_cast<std::int64_t>(dy.h) * dy.w;
  const std::int64_t m = static_cast<std::int64_t>(dy.n) * plane;
  parallel_for(dy.c, [&](std::int64_t c) {
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < dy.n; ++i) {
      const S* d = dy.sample(i) + c * plane;
      const S* xh = cache.xhat.sample(i) + c * plane;
      for (std::int64_t k = 0; k < plane; ++k) {
        s1 += d[k];
        s2 += static_cast<double>(d[k]) * xh[k];
      }
    }
    dbeta->v[c] = S(s1);
    dgamma->v[c] = S(s2);
    const double scale = p.gamma.v[c] * cache.inv_std[c] / m;
    for (int i = 0; i < dy.n; ++i) {
      const S* d = dy.sample(i) + c * plane;
      const S* xh = cache.xhat.sample(i) + c * plane;
      S* out = dx->sample(i) + c * plane;
      for (std::int64_t k = 0; k < plane; ++k)
        out[k] = S(scale * (m * d[k] - s1 - xh[k] * s2));
    }
  });
}

// ---------------------------------------------------------------------------
// Pooling. Output dims floor((in - window)/stride) + 1; trailing rows and
// columns that do not fill a window are dropped.

enum class PoolKind { max, avg };

struct PoolCache {
  std::vector<std::int64_t> argmax;  // flat index into the input, max pooling
};

template <typename S>
Tensor4<S> pool2d_forward(const Tensor4<S>& x, PoolKind kind, int window,
                          int stride, PoolCache* cache = nullptr) {
  if (window > x.h || window > x.w)
    throw ShapeMismatch("pool2d: window larger than input");
  const int oh = (x.h - window) / stride + 1;
  const int ow = (x.w - window) / stride + 1;
  Tensor4<S> y(x.n, x.c, oh, ow);
  if (cache && kind == PoolKind::max) cache->argmax.assign(y.v.size(), -1);
  const std::int64_t nc = static_cast<std::int64_t>(x.n) * x.c;
  parallel_for(nc, [&](std::int64_t q) {
    const int i = static_cast<int>(q / x.c);
    const int c = static_cast<int>(q % x.c);
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        if (kind == PoolKind::max) {
          S best = x.at(i, c, oy * stride, ox * stride);
          std::int64_t best_idx =
              ((static_cast<std::int64_t>(i) * x.c + c) * x.h + oy * stride) *
                  x.w +
              ox * stride;
          for (int ky = 0; ky < window; ++ky) {
            for (int kx = 0; kx < window; ++kx) {
              const int iy = oy * stride + ky, ix = ox * stride + kx;
              const S v = x.at(i, c, iy, ix);
              if (v > best) {  // strict: first index in row-major order wins
                best = v;
                best_idx =
                    ((static_cast<std::int64_t>(i) * x.c + c) * x.h + iy) *
                        x.w +
                    ix;
              }
            }
          }
          y.at(i, c, oy, ox) = best;
          if (cache)
            cache->argmax[((static_cast<std::int64_t>(i) * x.c + c) * oh + oy) *
                              ow +
                          ox] = best_idx;
        } else {
          double acc = 0.0;
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx)
              acc += x.at(i, c, oy * stride + ky, ox * stride + kx);
          y.at(i, c, oy, ox) = S(acc / (window * window));
        }
      }
    }
  });
  return y;
}

template <typename S>
Tensor4<S> pool2d_backward(const Tensor4<S>& dy, const Tensor4<S>& x,
                           PoolKind kind, int window, int stride,
                           const PoolCache* cache = nullptr) {
  Tensor4<S> dx(x.n, x.c, x.h, x.w);
  const int oh = dy.h, ow = dy.w;
  const std::int64_t nc = static_cast<std::int64_t>(x.n) * x.c;
  parallel_for(nc, [&](std::int64_t q) {
    const int i = static_cast<int>(q / x.c);
    const int c = static_cast<int>(q % x.c);
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const S g =
            dy.v[((static_cast<std::int64_t>(i) * x.c + c) * oh + oy) * ow + ox];
        if (kind == PoolKind::max) {
          std::int64_t idx;
          if (cache) {
            idx = cache->argmax[((static_cast<std::int64_t>(i) * x.c + c) * oh +
                                 oy) *
                                    ow +
                                ox];
          } else {
            // recompute argmax with the same tie rule
            S best = x.at(i, c, oy * stride, ox * stride);
            idx = ((static_cast<std::int64_t>(i) * x.c + c) * x.h +
                   oy * stride) *
                      x.w +
                  ox * stride;
            for (int ky = 0; ky < window; ++ky) {
              for (int kx = 0; kx < window; ++kx) {
                const int iy = oy * stride + ky, ix = ox * stride + kx;
                const S v = x.at(i, c, iy, ix);
                if (v > best) {
                  best = v;
                  idx = ((static_cast<std::int64_t>(i) * x.c + c) * x.h + iy) *
                            x.w +
                        ix;
                }
              }
            }
          }
          dx.v[idx] += g;
        } else {
          const S share = g / S(window * window);
          for (int ky = 0; ky < window; ++ky)
            for (int kx = 0; kx < window; ++kx)
              dx.at(i, c, oy * stride + ky, ox * stride + kx) += share;
        }
      }
    }
  });
  return dx;
}

// ---------------------------------------------------------------------------
// Fully connected over flattened features.

template <typename S>
Tensor4<S> fc_forward(const Tensor4<S>& x, const Tensor4<S>& w,
                      const Tensor4<S>& b) {
  const std::int64_t fin = x.features();
  if (w.c != fin)
    throw ShapeMismatch("fc: input features " + std::to_string(fin) +
                        " vs weight " + std::to_string(w.c));
  if (b.size() != w.n) throw ShapeMismatch("fc: bias length");
  Tensor4<S> y(x.n, w.n, 1, 1);
  detail::CMapM<S> xm(x.data(), x.n, fin);
  detail::CMapM<S> wm(w.data(), w.n, fin);
  detail::MapM<S> ym(y.data(), x.n, w.n);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += detail::CMapM<S>(b.data(), 1, w.n).row(0);
  return y;
}

template <typename S>
void fc_backward(const Tensor4<S>& x, const Tensor4<S>& w, const Tensor4<S>& dy,
                 Tensor4<S>* dx, Tensor4<S>* dw, Tensor4<S>* db) {
  const std::int64_t fin = x.features();
  if (dy.n != x.n || dy.features() != w.n)
    throw ShapeMismatch("fc_backward: dy " + dy.shape_str());
  *dx = Tensor4<S>(x.n, x.c, x.h, x.w);
  *dw = Tensor4<S>(w.n, w.c, 1, 1);
  *db = Tensor4<S>::vec(w.n);
  detail::CMapM<S> xm(x.data(), x.n, fin);
  detail::CMapM<S> wm(w.data(), w.n, fin);
  detail::CMapM<S> dym(dy.data(), x.n, w.n);
  detail::MapM<S>(dx->data(), x.n, fin).noalias() = dym * wm;
  detail::MapM<S>(dw->data(), w.n, fin).noalias() = dym.transpose() * xm;
  detail::MapM<S> dbm(db->data(), 1, w.n);
  dbm.row(0) = dym.colwise().sum();
}

// ---------------------------------------------------------------------------
// Elementwise activations.

template <typename S>
Tensor4<S> relu_forward(const Tensor4<S>& x) {
  Tensor4<S> y(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    y.v[i] = x.v[i] > S(0) ? x.v[i] : S(0);
  return y;
}

template <typename S>
Tensor4<S> relu_backward(const Tensor4<S>& dy, const Tensor4<S>& x) {
  require_same_shape(dy, x, "relu_backward");
  Tensor4<S> dx(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    dx.v[i] = x.v[i] > S(0) ? dy.v[i] : S(0);
  return dx;
}

/// Inverted dropout: train mode zeroes units with probability rate and
/// scales survivors by 1/(1-rate); infer mode is the identity.
template <typename S>
Tensor4<S> dropout_forward(const Tensor4<S>& x, double rate, Mode mode,
                           std::uint64_t seed,
                           std::vector<std::uint8_t>* mask = nullptr) {
  if (rate < 0.0 || rate >= 1.0)
    throw InternalError("dropout rate must be in [0,1): " +
                        std::to_string(rate));
  if (mode == Mode::infer || rate == 0.0) {
    if (mask) mask->assign(x.v.size(), 1);
    return x;
  }
  Tensor4<S> y(x.n, x.c, x.h, x.w);
  if (mask) mask->assign(x.v.size(), 0);
  Rng rng(seed);
  const S scale = S(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    if (rng.uniform() >= rate) {
      y.v[i] = x.v[i] * scale;
      if (mask) (*mask)[i] = 1;
    }
  }
  return y;
}

template <typename S>
Tensor4<S> dropout_backward(const Tensor4<S>& dy, double rate,
                            const std::vector<std::uint8_t>& mask) {
  if (mask.size() != dy.v.size()) throw ShapeMismatch("dropout_backward: mask");
  Tensor4<S> dx(dy.n, dy.c, dy.h, dy.w);
  const S scale = S(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < dy.v.size(); ++i)
    dx.v[i] = mask[i] ? dy.v[i] * scale : S(0);
  return dx;
}

// ---------------------------------------------------------------------------
// Softmax and softmax cross-entropy.

/// Row softmax. Accumulates in double and verifies, per row, that the
/// outputs are nonnegative and sum to 1 within 1e-9 before casting back;
/// a violation is an internal invariant failure, never silently ignored.
template <typename S>
Tensor4<S> softmax(const Tensor4<S>& logits) {
  const std::int64_t cdim = logits.features();
  if (cdim < 1) throw ShapeMismatch("softmax: empty class dimension");
  Tensor4<S> p(logits.n, logits.c, logits.h, logits.w);
  std::vector<double> row(cdim);
  for (int i = 0; i < logits.n; ++i) {
    const S* in = logits.sample(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < cdim; ++j)
      mx = std::max(mx, static_cast<double>(in[j]));
    double sum = 0.0;
    for (std::int64_t j = 0; j < cdim; ++j) {
      row[j] = std::exp(static_cast<double>(in[j]) - mx);
      sum += row[j];
    }
    double check = 0.0;
    S* out = p.sample(i);
    for (std::int64_t j = 0; j < cdim; ++j) {
      row[j] /= sum;
      if (row[j] < 0.0) throw InternalError("softmax produced negative value");
      check += row[j];
      out[j] = S(row[j]);
    }
    if (std::abs(check - 1.0) > 1e-9)
      throw InternalError("softmax row sum off by " +
                          std::to_string(check - 1.0));
  }
  return p;
}

template <typename S>
struct SoftmaxLoss {
  S loss;               // mean over the batch
  Tensor4<S> dlogits;   // (softmax - one_hot) / batch
};

template <typename S>
SoftmaxLoss<S> softmax_cross_entropy(const Tensor4<S>& logits,
                                     std::span<const int> labels) {
  const std::int64_t cdim = logits.features();
  if (static_cast<std::int64_t>(labels.size()) != logits.n)
    throw LengthMismatch("softmax_cross_entropy: " +
                         std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.n) + " rows");
  for (int lab : labels)
    if (lab < 0 || lab >= cdim)
      throw InvalidLabel(std::to_string(lab) + " outside " +
                         std::to_string(cdim) + " classes");
  SoftmaxLoss<S> out;
  out.dlogits = Tensor4<S>(logits.n, logits.c, logits.h, logits.w);
  double total = 0.0;
  const double invn = 1.0 / logits.n;
  std::vector<double> row(cdim);
  for (int i = 0; i < logits.n; ++i) {
    const S* in = logits.sample(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < cdim; ++j)
      mx = std::max(mx, static_cast<double>(in[j]));
    double sum = 0.0;
    for (std::int64_t j = 0; j < cdim; ++j) {
      row[j] = std::exp(static_cast<double>(in[j]) - mx);
      sum += row[j];
    }
    const double lse = mx + std::log(sum);
    total += lse - static_cast<double>(in[labels[i]]);
    S* g = out.dlogits.sample(i);
    for (std::int64_t j = 0; j < cdim; ++j)
      g[j] = S((row[j] / sum - (j == labels[i] ? 1.0 : 0.0)) * invn);
  }
  out.loss = S(total * invn);
  return out;
}

}  // namespace gestalt

#endif  // GESTALT_NN_LAYERS_HPP_
