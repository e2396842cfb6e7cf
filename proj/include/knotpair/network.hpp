#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "knotpair/errors.hpp"
#include "knotpair/features.hpp"
#include "knotpair/rng.hpp"

namespace knotpair {

enum class Activation { relu, none };

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::none;
  double dropout_rate = 0.0;
};

/// The embedding stack: 9 -> 1024 -> 512 -> 256 -> 128 -> 64 -> 128, ReLU on
/// every hidden layer, dropout 0.3 on the first four, linear 128-d output.
inline std::vector<LayerSpec> embedding_specs() {
  return {
      {9, 1024, Activation::relu, 0.3},  {1024, 512, Activation::relu, 0.3},
      {512, 256, Activation::relu, 0.3}, {256, 128, Activation::relu, 0.3},
      {128, 64, Activation::relu, 0.0},  {64, 128, Activation::none, 0.0},
  };
}

/// SimCLR projection head on top of the encoder output.
inline std::vector<LayerSpec> projection_specs() {
  return {{128, 64, Activation::relu, 0.0}, {64, 32, Activation::none, 0.0}};
}

inline void validate_specs(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw validation_error("layer specs empty");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.in_dim <= 0 || s.out_dim <= 0) {
      throw validation_error("layer " + std::to_string(i) +
                             ": non-positive dimension");
    }
    if (s.dropout_rate < 0.0 || s.dropout_rate >= 1.0) {
      throw validation_error("layer " + std::to_string(i) +
                             ": dropout_rate outside [0,1)");
    }
    if (i + 1 < specs.size() && s.out_dim != specs[i + 1].in_dim) {
      throw validation_error("layer " + std::to_string(i) +
                             ": dimension chain broken");
    }
  }
  const auto& last = specs.back();
  if (last.activation != Activation::none || last.dropout_rate != 0.0) {
    throw validation_error("final layer must be linear with no dropout");
  }
}

enum class Variant { standard, learnable_weights, custom_weights, simclr };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::learnable_weights: return "learnable_weights";
    case Variant::custom_weights: return "custom_weights";
    default: return "simclr";
  }
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "standard") return Variant::standard;
  if (name == "learnable_weights" || name == "learnable")
    return Variant::learnable_weights;
  if (name == "custom_weights" || name == "custom")
    return Variant::custom_weights;
  if (name == "simclr") return Variant::simclr;
  throw validation_error("unknown variant '" + name + "'");
}

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// One affine layer, stored input-major so a batch forward is X * W + b.
template <class Scalar>
struct Dense {
  Mat<Scalar> W;     // in_dim x out_dim
  RowVec<Scalar> b;  // 1 x out_dim
};

template <class Scalar>
struct Model {
  Variant variant = Variant::standard;
  std::vector<LayerSpec> specs;
  std::vector<Dense<Scalar>> layers;
  std::optional<RowVec<Scalar>> input_weights;  // elementwise input scaling
  bool input_weights_trainable = false;
  std::vector<LayerSpec> projection_specs;
  std::vector<Dense<Scalar>> projection;

  int input_dim() const { return specs.front().in_dim; }
  int embedding_dim() const { return specs.back().out_dim; }
  bool has_projection() const { return !projection.empty(); }
};

template <class Scalar>
bool model_equal(const Model<Scalar>& a, const Model<Scalar>& b) {
  auto layers_equal = [](const std::vector<Dense<Scalar>>& x,
                         const std::vector<Dense<Scalar>>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].W.rows() != y[i].W.rows() || x[i].W.cols() != y[i].W.cols())
        return false;
      if (x[i].W != y[i].W || x[i].b != y[i].b) return false;
    }
    return true;
  };
  if (a.variant != b.variant) return false;
  if (!layers_equal(a.layers, b.layers)) return false;
  if (!layers_equal(a.projection, b.projection)) return false;
  if (a.input_weights.has_value() != b.input_weights.has_value()) return false;
  if (a.input_weights && *a.input_weights != *b.input_weights) return false;
  return a.input_weights_trainable == b.input_weights_trainable;
}

namespace detail {

/// Uniform init in [-sqrt(6/fan_in), +sqrt(6/fan_in)], biases zero. Entry
/// order is pinned (layers in order, W row-major) so a seed fixes the model.
template <class Scalar>
std::vector<Dense<Scalar>> init_layers(const std::vector<LayerSpec>& specs,
                                       Rng& rng) {
  std::vector<Dense<Scalar>> layers;
  layers.reserve(specs.size());
  for (const auto& spec : specs) {
    Dense<Scalar> layer;
    layer.W.resize(spec.in_dim, spec.out_dim);
    const double bound = std::sqrt(6.0 / spec.in_dim);
    for (int i = 0; i < spec.in_dim; ++i) {
      for (int o = 0; o < spec.out_dim; ++o) {
        layer.W(i, o) = static_cast<Scalar>(uniform_range(rng, -bound, bound));
      }
    }
    layer.b = RowVec<Scalar>::Zero(spec.out_dim);
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace detail

template <class Scalar>
Model<Scalar> init_model(Variant variant, std::vector<LayerSpec> specs,
                         Rng& rng,
                         std::vector<LayerSpec> projection = {},
                         const std::optional<std::array<double, kFeatureCount>>&
                             custom_weights = std::nullopt) {
  validate_specs(specs);
  Model<Scalar> model;
  model.variant = variant;
  model.specs = std::move(specs);
  model.layers = detail::init_layers<Scalar>(model.specs, rng);

  if (variant == Variant::learnable_weights) {
    model.input_weights =
        RowVec<Scalar>::Constant(model.input_dim(), Scalar(1));
    model.input_weights_trainable = true;
  } else if (variant == Variant::custom_weights) {
    if (!custom_weights) {
      throw validation_error(
          "custom_weights variant requires a fixed weight vector");
    }
    if (model.input_dim() != kFeatureCount) {
      throw validation_error("custom weights need a 9-feature input layer");
    }
    RowVec<Scalar> w(kFeatureCount);
    for (int i = 0; i < kFeatureCount; ++i) {
      w(i) = static_cast<Scalar>((*custom_weights)[static_cast<std::size_t>(i)]);
    }
    model.input_weights = std::move(w);
    model.input_weights_trainable = false;
  } else if (variant == Variant::simclr) {
    validate_specs(projection);
    if (projection.front().in_dim != model.embedding_dim()) {
      throw validation_error("projection head does not chain onto encoder");
    }
    model.projection_specs = std::move(projection);
    model.projection = detail::init_layers<Scalar>(model.projection_specs, rng);
  }
  return model;
}

enum class ForwardMode { train, infer };

/// Activations recorded during a train-mode forward pass, enough to replay
/// the chain backwards. layer_inputs[l] feeds layer l; pre[l] is its affine
/// output; mask[l] is the scaled dropout mask (empty when unused).
template <class Scalar>
struct ForwardTrace {
  Mat<Scalar> raw_input;                  // before input weights
  std::vector<Mat<Scalar>> layer_inputs;  // one per chain layer
  std::vector<Mat<Scalar>> pre;
  std::vector<Mat<Scalar>> mask;
};

namespace detail {

template <class Scalar>
Mat<Scalar> run_chain(const std::vector<Dense<Scalar>>& layers,
                      const std::vector<LayerSpec>& specs, Mat<Scalar> h,
                      ForwardMode mode, Rng* rng, ForwardTrace<Scalar>* trace) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (h.cols() != specs[l].in_dim) {
      throw validation_error("forward: input width " +
                             std::to_string(h.cols()) + " != layer in_dim " +
                             std::to_string(specs[l].in_dim));
    }
    if (trace) trace->layer_inputs.push_back(h);
    Mat<Scalar> pre = h * layers[l].W;
    pre.rowwise() += layers[l].b;
    if (trace) trace->pre.push_back(pre);
    Mat<Scalar> post = specs[l].activation == Activation::relu
                           ? pre.cwiseMax(Scalar(0)).eval()
                           : pre;
    if (mode == ForwardMode::train && specs[l].dropout_rate > 0.0) {
      if (!rng) throw validation_error("train-mode forward requires an rng");
      const double rate = specs[l].dropout_rate;
      const Scalar scale = Scalar(1.0 / (1.0 - rate));
      Mat<Scalar> mask(post.rows(), post.cols());
      for (Eigen::Index r = 0; r < mask.rows(); ++r) {
        for (Eigen::Index c = 0; c < mask.cols(); ++c) {
          mask(r, c) = uniform_unit(*rng) < rate ? Scalar(0) : scale;
        }
      }
      post.array() *= mask.array();
      if (trace) trace->mask.push_back(std::move(mask));
    } else if (trace) {
      trace->mask.emplace_back();
    }
    h = std::move(post);
  }
  return h;
}

}  // namespace detail

/// Batched forward pass. Rows of X are feature vectors. In train mode
/// inverted dropout keeps inference a plain affine/ReLU chain. Set
/// through_projection to run the SimCLR head as well.
template <class Scalar>
Mat<Scalar> forward_batch(const Model<Scalar>& model, const Mat<Scalar>& X,
                          ForwardMode mode = ForwardMode::infer,
                          Rng* rng = nullptr,
                          ForwardTrace<Scalar>* trace = nullptr,
                          bool through_projection = false) {
  if (X.cols() != model.input_dim()) {
    throw validation_error("forward: expected " +
                           std::to_string(model.input_dim()) +
                           " features, got " + std::to_string(X.cols()));
  }
  Mat<Scalar> h = X;
  if (trace) {
    trace->raw_input = X;
    trace->layer_inputs.clear();
    trace->pre.clear();
    trace->mask.clear();
  }
  if (model.input_weights) {
    h.array().rowwise() *= model.input_weights->array();
  }
  h = detail::run_chain(model.layers, model.specs, std::move(h), mode, rng,
                        trace);
  if (through_projection && model.has_projection()) {
    h = detail::run_chain(model.projection, model.projection_specs,
                          std::move(h), mode, rng, trace);
  }
  return h;
}

/// Single-record forward; the embedding for one feature vector.
template <class Scalar>
RowVec<Scalar> forward(const Model<Scalar>& model, const FeatureVector& x,
                       ForwardMode mode = ForwardMode::infer,
                       Rng* rng = nullptr) {
  Mat<Scalar> X(1, kFeatureCount);
  for (int i = 0; i < kFeatureCount; ++i) X(0, i) = static_cast<Scalar>(x[i]);
  return forward_batch(model, X, mode, rng).row(0);
}

/// Gradient holder mirroring the trainable parameters of a Model.
template <class Scalar>
struct Gradients {
  std::vector<Dense<Scalar>> layers;
  std::optional<RowVec<Scalar>> input_weights;
  std::vector<Dense<Scalar>> projection;
};

/// Reverse-mode pass over a recorded forward. d_out is dLoss/d(chain output)
/// for the same batch; the returned gradients are exact for the recorded
/// dropout masks. When the trace covers encoder+projection the projection
/// gradients are split off by layer count.
template <class Scalar>
Gradients<Scalar> backward_batch(const Model<Scalar>& model,
                                 const ForwardTrace<Scalar>& trace,
                                 const Mat<Scalar>& d_out) {
  const std::size_t n_enc = model.layers.size();
  const std::size_t n_total = trace.layer_inputs.size();
  const bool with_projection = n_total > n_enc;
  if (with_projection && n_total != n_enc + model.projection.size()) {
    throw validation_error("backward: trace does not match model layers");
  }

  auto spec_at = [&](std::size_t l) -> const LayerSpec& {
    return l < n_enc ? model.specs[l] : model.projection_specs[l - n_enc];
  };
  auto layer_at = [&](std::size_t l) -> const Dense<Scalar>& {
    return l < n_enc ? model.layers[l] : model.projection[l - n_enc];
  };

  Gradients<Scalar> grads;
  grads.layers.resize(n_enc);
  if (with_projection) grads.projection.resize(model.projection.size());

  Mat<Scalar> d = d_out;
  for (std::size_t li = n_total; li-- > 0;) {
    if (trace.mask[li].size() > 0) d.array() *= trace.mask[li].array();
    if (spec_at(li).activation == Activation::relu) {
      d.array() *=
          (trace.pre[li].array() > Scalar(0)).template cast<Scalar>();
    }
    Dense<Scalar>& g =
        li < n_enc ? grads.layers[li] : grads.projection[li - n_enc];
    g.W = trace.layer_inputs[li].transpose() * d;
    g.b = d.colwise().sum();
    if (li > 0 || (model.input_weights && model.input_weights_trainable)) {
      d = d * layer_at(li).W.transpose();
    }
  }

  if (model.input_weights && model.input_weights_trainable) {
    // layer_inputs[0] is raw_input scaled by the weights; chain rule per
    // feature is sum_b d(b,j) * raw(b,j).
    grads.input_weights =
        (d.array() * trace.raw_input.array()).colwise().sum();
  }
  return grads;
}

/// Infer-mode embeddings for every row, order preserved.
template <class Scalar>
Mat<Scalar> embed_all(const Model<Scalar>& model, const Mat<Scalar>& X) {
  if (X.rows() == 0) return Mat<Scalar>(0, model.embedding_dim());
  return forward_batch(model, X);
}

/// Normalized per-feature importances |w_i| / sum |w_j| in canonical feature
/// order. Only meaningful for variants with an input-weight vector.
template <class Scalar>
std::array<double, kFeatureCount> report_learned_weights(
    const Model<Scalar>& model) {
  if (!model.input_weights) {
    throw validation_error("report_learned_weights: variant has no input "
                           "weight vector");
  }
  const auto& w = *model.input_weights;
  if (w.size() != kFeatureCount) {
    throw validation_error("report_learned_weights: expected 9 weights");
  }
  double total = 0.0;
  for (int i = 0; i < kFeatureCount; ++i) total += std::abs(double(w(i)));
  if (total == 0.0) {
    throw validation_error("report_learned_weights: all weights are zero");
  }
  std::array<double, kFeatureCount> out{};
  for (int i = 0; i < kFeatureCount; ++i) {
    out[static_cast<std::size_t>(i)] = std::abs(double(w(i))) / total;
  }
  return out;
}

}  // namespace knotpair
