#ifndef GESTALT_NN_OPTIM_HPP_
#define GESTALT_NN_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gestalt/nn/tensor.hpp"

namespace gestalt {

enum class OptimizerKind { adam, sgd_momentum };

inline const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd_momentum";
}

/// Optimizer state over a flat list of parameter tensors. Buffers mirror
/// parameter shapes; they are lazily sized on the first step.
template <typename S>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  S lr = S(1e-3);
  // Adam
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  // SGD
  S momentum = S(0.9);

  std::int64_t timestep = 0;
  std::vector<std::vector<S>> m;  // first moment / velocity
  std::vector<std::vector<S>> v;  // second moment (Adam only)

  static OptimizerState adam(S lr) {
    OptimizerState s;
    s.kind = OptimizerKind::adam;
    s.lr = lr;
    return s;
  }
  static OptimizerState sgd(S lr, S momentum) {
    OptimizerState s;
    s.kind = OptimizerKind::sgd_momentum;
    s.lr = lr;
    s.momentum = momentum;
    return s;
  }
};

/// One update step. Adam follows the published update with bias correction;
/// SGD uses velocity = momentum * velocity - lr * grad; param += velocity.
template <typename S>
void optimizer_step(OptimizerState<S>& state, std::vector<Tensor4<S>*> params,
                    std::vector<const Tensor4<S>*> grads) {
  if (params.size() != grads.size())
    throw ShapeMismatch("optimizer_step: params/grads count");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->v.size(), S(0));
      if (state.kind == OptimizerKind::adam)
        state.v[i].assign(params[i]->v.size(), S(0));
    }
  }
  if (state.m.size() != params.size())
    throw ShapeMismatch("optimizer_step: state buffer count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]))
      throw ShapeMismatch("optimizer_step: param " + std::to_string(i) + " " +
                          params[i]->shape_str() + " vs grad " +
                          grads[i]->shape_str());
    if (state.m[i].size() != params[i]->v.size())
      throw ShapeMismatch("optimizer_step: state buffer " + std::to_string(i));
  }

  if (state.kind == OptimizerKind::adam) {
    state.timestep += 1;
    const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1),
                                      static_cast<double>(state.timestep));
    const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2),
                                      static_cast<double>(state.timestep));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i]->v;
      const auto& g = grads[i]->v;
      auto& m = state.m[i];
      auto& v = state.v[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = state.beta1 * m[k] + (S(1) - state.beta1) * g[k];
        v[k] = state.beta2 * v[k] + (S(1) - state.beta2) * g[k] * g[k];
        const S mhat = S(m[k] / bc1);
        const S vhat = S(v[k] / bc2);
        p[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
      }
    }
  } else {
    state.timestep += 1;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i]->v;
      const auto& g = grads[i]->v;
      auto& vel = state.m[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        vel[k] = state.momentum * vel[k] - state.lr * g[k];
        p[k] += vel[k];
      }
    }
  }
}

}  // namespace gestalt

#endif  // GESTALT_NN_OPTIM_HPP_
