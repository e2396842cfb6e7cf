#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "knotpair/errors.hpp"
#include "knotpair/network.hpp"
#include "knotpair/training.hpp"

namespace knotpair {

/// Model file layout (JSON): a format tag, the variant name, one entry per
/// layer carrying dims/activation/dropout plus the weight matrix as out_dim
/// rows of in_dim values and the bias vector, the optional input-weight
/// vector, the optional projection head, and a free-form "meta" object for
/// the seed and config echo. Doubles serialize in round-trip form, so
/// load(save(m)) reproduces m bit for bit.

inline void to_json(nlohmann::json& j, const AugmentConfig& a) {
  j = {{"noise_sigma", a.noise_sigma},
       {"scale_min", a.scale_min},
       {"scale_max", a.scale_max},
       {"drop_prob", a.drop_prob}};
}

inline void from_json(const nlohmann::json& j, AugmentConfig& a) {
  j.at("noise_sigma").get_to(a.noise_sigma);
  j.at("scale_min").get_to(a.scale_min);
  j.at("scale_max").get_to(a.scale_max);
  j.at("drop_prob").get_to(a.drop_prob);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"variant", variant_name(c.variant)},
       {"margin", c.margin},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"temperature", c.temperature},
       {"seed", c.seed},
       {"augment", c.augment}};
  if (c.custom_weights) j["custom_weights"] = *c.custom_weights;
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("variant")) {
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c = default_train_config(c.variant);  // variant-specific baselines first
  }
  if (j.contains("margin")) j.at("margin").get_to(c.margin);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("weight_decay")) j.at("weight_decay").get_to(c.weight_decay);
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("temperature")) j.at("temperature").get_to(c.temperature);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("augment")) j.at("augment").get_to(c.augment);
  if (j.contains("custom_weights")) {
    std::array<double, kFeatureCount> w{};
    j.at("custom_weights").get_to(w);
    c.custom_weights = w;
  }
}

namespace detail {

inline std::string activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "none";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "none") return Activation::none;
  throw format_error("model file: unknown activation '" + s + "'");
}

template <class Scalar>
nlohmann::json layers_to_json(const std::vector<Dense<Scalar>>& layers,
                              const std::vector<LayerSpec>& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = specs[l];
    const auto& layer = layers[l];
    nlohmann::json weights = nlohmann::json::array();
    for (int o = 0; o < spec.out_dim; ++o) {
      nlohmann::json row = nlohmann::json::array();
      for (int i = 0; i < spec.in_dim; ++i) {
        row.push_back(double(layer.W(i, o)));
      }
      weights.push_back(std::move(row));
    }
    nlohmann::json bias = nlohmann::json::array();
    for (int o = 0; o < spec.out_dim; ++o) bias.push_back(double(layer.b(o)));
    arr.push_back({{"in", spec.in_dim},
                   {"out", spec.out_dim},
                   {"activation", activation_name(spec.activation)},
                   {"dropout", spec.dropout_rate},
                   {"weights", std::move(weights)},
                   {"bias", std::move(bias)}});
  }
  return arr;
}

template <class Scalar>
void layers_from_json(const nlohmann::json& arr,
                      std::vector<Dense<Scalar>>& layers,
                      std::vector<LayerSpec>& specs) {
  if (!arr.is_array() || arr.empty()) {
    throw format_error("model file: layers must be a non-empty array");
  }
  layers.clear();
  specs.clear();
  for (const auto& jl : arr) {
    LayerSpec spec;
    spec.in_dim = jl.at("in").get<int>();
    spec.out_dim = jl.at("out").get<int>();
    spec.activation = activation_from_name(jl.at("activation").get<std::string>());
    spec.dropout_rate = jl.at("dropout").get<double>();
    const auto& weights = jl.at("weights");
    const auto& bias = jl.at("bias");
    if (int(weights.size()) != spec.out_dim || int(bias.size()) != spec.out_dim) {
      throw format_error("model file: layer weight dims do not match header");
    }
    Dense<Scalar> layer;
    layer.W.resize(spec.in_dim, spec.out_dim);
    for (int o = 0; o < spec.out_dim; ++o) {
      const auto& row = weights[std::size_t(o)];
      if (int(row.size()) != spec.in_dim) {
        throw format_error("model file: weight row width mismatch");
      }
      for (int i = 0; i < spec.in_dim; ++i) {
        layer.W(i, o) = static_cast<Scalar>(row[std::size_t(i)].get<double>());
      }
    }
    layer.b.resize(spec.out_dim);
    for (int o = 0; o < spec.out_dim; ++o) {
      layer.b(o) = static_cast<Scalar>(bias[std::size_t(o)].get<double>());
    }
    specs.push_back(spec);
    layers.push_back(std::move(layer));
  }
  try {
    validate_specs(specs);
  } catch (const validation_error& e) {
    throw format_error(std::string("model file: ") + e.what());
  }
}

}  // namespace detail

template <class Scalar>
nlohmann::json model_to_json(const Model<Scalar>& model,
                             const nlohmann::json& meta = {}) {
  nlohmann::json j;
  j["format"] = "knotpair-model";
  j["version"] = 1;
  j["variant"] = variant_name(model.variant);
  j["layers"] = detail::layers_to_json(model.layers, model.specs);
  if (model.input_weights) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.input_weights->size(); ++i) {
      w.push_back(double((*model.input_weights)(i)));
    }
    j["input_weights"] = std::move(w);
    j["input_weights_trainable"] = model.input_weights_trainable;
  }
  if (model.has_projection()) {
    j["projection"] =
        detail::layers_to_json(model.projection, model.projection_specs);
  }
  if (!meta.is_null()) j["meta"] = meta;
  return j;
}

template <class Scalar>
Model<Scalar> model_from_json(const nlohmann::json& j,
                              nlohmann::json* meta = nullptr) {
  if (!j.is_object() || j.value("format", "") != "knotpair-model") {
    throw format_error("model file: missing knotpair-model format tag");
  }
  if (j.value("version", 0) != 1) {
    throw format_error("model file: unsupported version");
  }
  Model<Scalar> model;
  model.variant = variant_from_name(j.at("variant").get<std::string>());
  detail::layers_from_json<Scalar>(j.at("layers"), model.layers, model.specs);
  if (j.contains("input_weights")) {
    const auto& w = j.at("input_weights");
    if (int(w.size()) != model.input_dim()) {
      throw format_error("model file: input_weights length mismatch");
    }
    RowVec<Scalar> iw(model.input_dim());
    for (int i = 0; i < model.input_dim(); ++i) {
      iw(i) = static_cast<Scalar>(w[std::size_t(i)].get<double>());
    }
    model.input_weights = std::move(iw);
    model.input_weights_trainable = j.value("input_weights_trainable", false);
  }
  if (j.contains("projection")) {
    detail::layers_from_json<Scalar>(j.at("projection"), model.projection,
                                     model.projection_specs);
    if (model.projection_specs.front().in_dim != model.embedding_dim()) {
      throw format_error("model file: projection does not chain onto encoder");
    }
  }
  if (meta) *meta = j.value("meta", nlohmann::json{});
  return model;
}

template <class Scalar>
void save_model(const Model<Scalar>& model, const std::string& path,
                const nlohmann::json& meta = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot create " + path);
  out << model_to_json(model, meta).dump() << "\n";
  if (!out) throw io_error("write failed: " + path);
}

template <class Scalar>
Model<Scalar> load_model(const std::string& path,
                         nlohmann::json* meta = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path + ": " + e.what());
  }
  try {
    return model_from_json<Scalar>(j, meta);
  } catch (const format_error& e) {
    throw format_error(path + ": " + e.what());
  }
}

}  // namespace knotpair
