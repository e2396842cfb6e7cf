#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "knotpair/errors.hpp"
#include "knotpair/network.hpp"

namespace knotpair {

/// Classic Adam: beta1 0.9, beta2 0.999, eps 1e-8, bias correction, with
/// weight decay folded into the gradient as coupled L2 before the moment
/// updates. State mirrors the trainable parameters.
template <class Scalar>
struct AdamState {
  std::vector<Dense<Scalar>> m_layers, v_layers;
  std::optional<RowVec<Scalar>> m_input, v_input;
  std::vector<Dense<Scalar>> m_proj, v_proj;
  long step = 0;

  static AdamState zeros_like(const Model<Scalar>& model) {
    AdamState s;
    auto zero_layers = [](const std::vector<Dense<Scalar>>& layers) {
      std::vector<Dense<Scalar>> z;
      z.reserve(layers.size());
      for (const auto& l : layers) {
        z.push_back(Dense<Scalar>{Mat<Scalar>::Zero(l.W.rows(), l.W.cols()),
                                  RowVec<Scalar>::Zero(l.b.size())});
      }
      return z;
    };
    s.m_layers = zero_layers(model.layers);
    s.v_layers = zero_layers(model.layers);
    s.m_proj = zero_layers(model.projection);
    s.v_proj = zero_layers(model.projection);
    if (model.input_weights && model.input_weights_trainable) {
      s.m_input = RowVec<Scalar>::Zero(model.input_weights->size());
      s.v_input = RowVec<Scalar>::Zero(model.input_weights->size());
    }
    return s;
  }
};

namespace detail {

template <class Scalar, class Param>
void adam_update(Param& theta, const Param& grad, Param& m, Param& v,
                 Scalar lr, Scalar decay, Scalar bc1, Scalar bc2) {
  constexpr Scalar b1 = Scalar(0.9), b2 = Scalar(0.999), eps = Scalar(1e-8);
  Param g = grad;
  if (decay != Scalar(0)) g += decay * theta;
  m = b1 * m + (Scalar(1) - b1) * g;
  v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
  theta.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace detail

template <class Scalar>
void adam_step(Model<Scalar>& model, const Gradients<Scalar>& grads,
               AdamState<Scalar>& state, Scalar lr, Scalar weight_decay) {
  if (grads.layers.size() != model.layers.size() ||
      grads.projection.size() != model.projection.size()) {
    throw validation_error("adam_step: gradient shapes do not mirror model");
  }
  state.step += 1;
  const Scalar bc1 =
      Scalar(1) - std::pow(Scalar(0.9), Scalar(state.step));
  const Scalar bc2 =
      Scalar(1) - std::pow(Scalar(0.999), Scalar(state.step));

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    detail::adam_update(model.layers[l].W, grads.layers[l].W,
                        state.m_layers[l].W, state.v_layers[l].W, lr,
                        weight_decay, bc1, bc2);
    detail::adam_update(model.layers[l].b, grads.layers[l].b,
                        state.m_layers[l].b, state.v_layers[l].b, lr,
                        weight_decay, bc1, bc2);
  }
  for (std::size_t l = 0; l < model.projection.size(); ++l) {
    detail::adam_update(model.projection[l].W, grads.projection[l].W,
                        state.m_proj[l].W, state.v_proj[l].W, lr, weight_decay,
                        bc1, bc2);
    detail::adam_update(model.projection[l].b, grads.projection[l].b,
                        state.m_proj[l].b, state.v_proj[l].b, lr, weight_decay,
                        bc1, bc2);
  }
  if (model.input_weights && model.input_weights_trainable) {
    if (!grads.input_weights) {
      throw validation_error("adam_step: missing input weight gradient");
    }
    detail::adam_update(*model.input_weights, *grads.input_weights,
                        *state.m_input, *state.v_input, lr, weight_decay, bc1,
                        bc2);
  }
}

}  // namespace knotpair
