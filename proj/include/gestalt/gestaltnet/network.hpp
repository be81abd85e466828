#ifndef GESTALT_GESTALTNET_NETWORK_HPP_
#define GESTALT_GESTALTNET_NETWORK_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gestalt/core/rng.hpp"
#include "gestalt/gestaltnet/architecture.hpp"
#include "gestalt/nn/init.hpp"
#include "gestalt/nn/layers.hpp"
#include "gestalt/nn/tensor.hpp"

namespace gestalt {

/// The assembled region-expert network. Fixed topology from the descriptor;
/// forward/backward composed from the layer primitives. All randomness is
/// injected through seeds so identical calls are bit-identical.
template <typename S>
class Network {
public:
  explicit Network(ArchitectureDescriptor arch) : arch_(std::move(arch)) {
    arch_.validate();
    const std::int64_t flat = arch_.flat_features();
    for (const auto& spec : arch_.convs) {
      ConvBlock block;
      block.kernel = spec.kernel;
      block.pad = spec.kernel / 2;
      block.relu = spec.relu;
      if (spec.batch_norm) block.bn.emplace(spec.out_channels);
      convs_.push_back(std::move(block));
    }
    hidden_w_ = Tensor4<S>(arch_.hidden_width, static_cast<int>(flat), 1, 1);
    hidden_b_ = Tensor4<S>::vec(arch_.hidden_width);
    head_w_ = Tensor4<S>(arch_.head_width, arch_.hidden_width, 1, 1);
    head_b_ = Tensor4<S>::vec(arch_.head_width);
    allocate_conv_weights();
  }

  /// He-normal weights, zero biases, unit BN gamma / zero beta, running
  /// stats at (0, 1).
  void init_params(std::uint64_t seed) {
    int cin = arch_.input_channels;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      const auto& spec = arch_.convs[i];
      convs_[i].w = init_he_normal<S>(spec.out_channels, cin, spec.kernel,
                                      spec.kernel,
                                      derive_seed(seed, {0xc0, i}));
      convs_[i].b = Tensor4<S>::vec(spec.out_channels);
      if (convs_[i].bn) {
        *convs_[i].bn = BatchNormParams<S>(spec.out_channels);
        for (auto& rv : convs_[i].bn->running_var.v) rv = S(1);
      }
      cin = spec.out_channels;
    }
    hidden_w_ = init_he_normal<S>(arch_.hidden_width,
                                  static_cast<int>(arch_.flat_features()), 1,
                                  1, derive_seed(seed, {0xfc, 0}));
    hidden_b_ = Tensor4<S>::vec(arch_.hidden_width);
    head_w_ = init_he_normal<S>(arch_.head_width, arch_.hidden_width, 1, 1,
                                derive_seed(seed, {0xfc, 1}));
    head_b_ = Tensor4<S>::vec(arch_.head_width);
  }

  /// Swaps the classification head for a fresh one of `classes` outputs,
  /// initialized with the scaled Xavier normal; every other tensor is
  /// untouched.
  void replace_head(int classes, double init_scale, std::uint64_t seed) {
    if (classes < 1) throw InsufficientClasses("head needs >= 1 class");
    head_w_ = init_xavier_modified<S>(classes, arch_.hidden_width, 1, 1,
                                      init_scale, seed);
    head_b_ = Tensor4<S>::vec(classes);
    arch_.head_width = classes;
  }

  struct Cache {
    std::vector<Tensor4<S>> conv_in;   // input to conv i
    std::vector<BatchNormCache<S>> bn; // per conv with BN
    std::vector<Tensor4<S>> relu_in;   // BN output per conv with ReLU
    std::vector<Tensor4<S>> pool_in;   // activation entering pool p
    std::vector<PoolCache> pool;       // argmax bookkeeping
    Tensor4<S> flat;                   // hidden FC input
    Tensor4<S> hidden_relu_in;         // hidden FC output
    Tensor4<S> dropout_in;             // hidden ReLU output
    std::vector<std::uint8_t> dropout_mask;
    Tensor4<S> head_in;                // dropout output
  };

  /// Returns logits. Train mode uses batch statistics and live dropout
  /// (seeded); infer mode is deterministic and independent of batch
  /// composition.
  Tensor4<S> forward(const Tensor4<S>& x, Mode mode,
                     std::uint64_t dropout_seed = 0,
                     Cache* cache = nullptr) {
    if (x.c != arch_.input_channels || x.h != arch_.input_side ||
        x.w != arch_.input_side)
      throw ShapeMismatch("network input " + x.shape_str() + ", expected (n," +
                          std::to_string(arch_.input_channels) + "," +
                          std::to_string(arch_.input_side) + "," +
                          std::to_string(arch_.input_side) + ")");
    if (cache) {
      cache->conv_in.clear();
      cache->bn.assign(convs_.size(), {});
      cache->relu_in.assign(convs_.size(), {});
      cache->pool_in.assign(arch_.pools.size(), {});
      cache->pool.assign(arch_.pools.size(), {});
    }
    Tensor4<S> act = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      auto& block = convs_[i];
      if (cache) cache->conv_in.push_back(act);
      act = conv2d_forward(act, block.w, block.b, 1, block.pad);
      if (block.bn)
        act = batchnorm_forward(act, *block.bn, mode,
                                cache ? &cache->bn[i] : nullptr);
      if (block.relu) {
        if (cache) cache->relu_in[i] = act;
        act = relu_forward(act);
      }
      if (i % 2 == 1) {
        const std::size_t p = i / 2;
        if (cache) cache->pool_in[p] = act;
        act = pool2d_forward(act, arch_.pools[p], arch_.pool_window,
                             arch_.pool_stride, cache ? &cache->pool[p] : nullptr);
      }
    }
    // flatten is a reshape: storage is already (n, features)
    Tensor4<S> flat(act.n, static_cast<int>(act.features()), 1, 1);
    flat.v = std::move(act.v);
    if (cache) cache->flat = flat;
    Tensor4<S> hidden = fc_forward(flat, hidden_w_, hidden_b_);
    if (cache) cache->hidden_relu_in = hidden;
    Tensor4<S> hidden_act = relu_forward(hidden);
    if (cache) cache->dropout_in = hidden_act;
    Tensor4<S> dropped =
        dropout_forward(hidden_act, arch_.dropout_rate, mode, dropout_seed,
                        cache ? &cache->dropout_mask : nullptr);
    if (cache) cache->head_in = dropped;
    return fc_forward(dropped, head_w_, head_b_);
  }

  /// Gradient tensors in the same order as parameters().
  std::vector<Tensor4<S>> zero_gradients() const {
    std::vector<Tensor4<S>> grads;
    for (const auto& block : convs_) {
      grads.push_back(Tensor4<S>(block.w.n, block.w.c, block.w.h, block.w.w));
      grads.push_back(Tensor4<S>::vec(block.b.c));
      if (block.bn) {
        grads.push_back(Tensor4<S>::vec(block.bn->gamma.c));
        grads.push_back(Tensor4<S>::vec(block.bn->beta.c));
      }
    }
    grads.push_back(Tensor4<S>(hidden_w_.n, hidden_w_.c, 1, 1));
    grads.push_back(Tensor4<S>::vec(hidden_b_.c));
    grads.push_back(Tensor4<S>(head_w_.n, head_w_.c, 1, 1));
    grads.push_back(Tensor4<S>::vec(head_b_.c));
    return grads;
  }

  /// Softmax cross-entropy loss with full backward pass. Gradients are
  /// written into `grads` (layout of zero_gradients()); returns the mean
  /// loss. `correct` counts argmax hits for training accuracy.
  S loss_and_gradients(const Tensor4<S>& x, std::span<const int> labels,
                       std::uint64_t dropout_seed,
                       std::vector<Tensor4<S>>* grads, int* correct = nullptr) {
    Cache cache;
    Tensor4<S> logits = forward(x, Mode::train, dropout_seed, &cache);
    if (correct) *correct = count_correct(logits, labels);
    auto loss = softmax_cross_entropy<S>(logits, labels);

    std::size_t gi = grads->size();
    Tensor4<S> dy;
    // head
    fc_backward(cache.head_in, head_w_, loss.dlogits, &dy, &(*grads)[gi - 2],
                &(*grads)[gi - 1]);
    gi -= 2;
    dy = dropout_backward(dy, arch_.dropout_rate, cache.dropout_mask);
    dy = relu_backward(dy, cache.hidden_relu_in);
    Tensor4<S> dflat;
    fc_backward(cache.flat, hidden_w_, dy, &dflat, &(*grads)[gi - 2],
                &(*grads)[gi - 1]);
    gi -= 2;

    // un-flatten to the last pooled shape
    const auto shapes = arch_.feature_shapes();
    const auto& pooled = shapes[shapes.size() - 4].second;
    Tensor4<S> dact(dflat.n, pooled[0], pooled[1], pooled[2]);
    dact.v = std::move(dflat.v);

    for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
      auto& block = convs_[i];
      if (i % 2 == 1) {
        const std::size_t p = i / 2;
        dact = pool2d_backward(dact, cache.pool_in[p], arch_.pools[p],
                               arch_.pool_window, arch_.pool_stride,
                               &cache.pool[p]);
      }
      if (block.relu) dact = relu_backward(dact, cache.relu_in[i]);
      if (block.bn) {
        Tensor4<S> dgamma, dbeta, dxbn;
        batchnorm_backward(dact, cache.bn[i], *block.bn, &dxbn, &dgamma,
                           &dbeta);
        dact = std::move(dxbn);
        (*grads)[gi - 1] = std::move(dbeta);
        (*grads)[gi - 2] = std::move(dgamma);
        gi -= 2;
      }
      Tensor4<S> dx;
      conv2d_backward(cache.conv_in[i], block.w, dact, 1, block.pad, &dx,
                      &(*grads)[gi - 2], &(*grads)[gi - 1]);
      gi -= 2;
      dact = std::move(dx);
    }
    if (gi != 0) throw InternalError("gradient layout mismatch");
    return loss.loss;
  }

  static int count_correct(const Tensor4<S>& logits,
                           std::span<const int> labels) {
    int correct = 0;
    const std::int64_t cdim = logits.features();
    for (int i = 0; i < logits.n; ++i) {
      const S* row = logits.sample(i);
      int best = 0;
      for (std::int64_t j = 1; j < cdim; ++j)
        if (row[j] > row[best]) best = static_cast<int>(j);
      if (best == labels[i]) ++correct;
    }
    return correct;
  }

  struct ParamRef {
    std::string name;
    Tensor4<S>* tensor;
  };

  /// Learnable tensors, stable order (matches zero_gradients()).
  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      const std::string base = "conv" + std::to_string(i);
      refs.push_back({base + ".weight", &convs_[i].w});
      refs.push_back({base + ".bias", &convs_[i].b});
      if (convs_[i].bn) {
        refs.push_back({base + ".bn.gamma", &convs_[i].bn->gamma});
        refs.push_back({base + ".bn.beta", &convs_[i].bn->beta});
      }
    }
    refs.push_back({"hidden.weight", &hidden_w_});
    refs.push_back({"hidden.bias", &hidden_b_});
    refs.push_back({"head.weight", &head_w_});
    refs.push_back({"head.bias", &head_b_});
    return refs;
  }

  /// parameters() plus BN running statistics; everything a checkpoint needs.
  std::vector<ParamRef> state_tensors() {
    std::vector<ParamRef> refs = parameters();
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      if (!convs_[i].bn) continue;
      const std::string base = "conv" + std::to_string(i);
      refs.push_back({base + ".bn.running_mean", &convs_[i].bn->running_mean});
      refs.push_back({base + ".bn.running_var", &convs_[i].bn->running_var});
    }
    return refs;
  }

  const ArchitectureDescriptor& arch() const { return arch_; }
  int head_width() const { return arch_.head_width; }

private:
  struct ConvBlock {
    Tensor4<S> w, b;
    std::optional<BatchNormParams<S>> bn;
    bool relu = true;
    int kernel = 3;
    int pad = 1;
  };

  void allocate_conv_weights() {
    int cin = arch_.input_channels;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      const auto& spec = arch_.convs[i];
      convs_[i].w = Tensor4<S>(spec.out_channels, cin, spec.kernel, spec.kernel);
      convs_[i].b = Tensor4<S>::vec(spec.out_channels);
      cin = spec.out_channels;
    }
  }

  ArchitectureDescriptor arch_;
  std::vector<ConvBlock> convs_;
  Tensor4<S> hidden_w_, hidden_b_;
  Tensor4<S> head_w_, head_b_;
};

}  // namespace gestalt

#endif  // GESTALT_GESTALTNET_NETWORK_HPP_
