#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "knotpair/losses.hpp"
#include "knotpair/network.hpp"
#include "knotpair/optimizer.hpp"
#include "knotpair/triplets.hpp"

namespace knotpair {

/// Fixed input-weight profile for the custom-weights variant: domain
/// intuition says knot type and pith type should matter most, so they get
/// 0.18 and 0.40 and the seven geometric features 0.06 each.
inline constexpr std::array<double, kFeatureCount> kDefaultCustomWeights = {
    0.06, 0.06, 0.06, 0.06, 0.06, 0.06, 0.06, 0.18, 0.4};

struct TrainConfig {
  Variant variant = Variant::standard;
  double margin = 1.0;
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int epochs = 2000;
  int batch_size = 32;       // triplets per batch; feature rows for simclr
  double temperature = 0.5;  // simclr only
  std::uint64_t seed = 0;
  AugmentConfig augment;
  std::optional<std::array<double, kFeatureCount>> custom_weights;

  void validate() const {
    if (!(margin > 0)) throw validation_error("train config: margin <= 0");
    if (!(learning_rate > 0)) {
      throw validation_error("train config: learning_rate <= 0");
    }
    if (weight_decay < 0) {
      throw validation_error("train config: weight_decay < 0");
    }
    if (epochs < 1) throw validation_error("train config: epochs < 1");
    if (batch_size < 1) throw validation_error("train config: batch_size < 1");
    if (!(temperature > 0)) {
      throw validation_error("train config: temperature <= 0");
    }
    if (variant == Variant::custom_weights && !custom_weights) {
      throw validation_error(
          "train config: custom_weights variant needs a weight vector");
    }
  }
};

/// Per-variant defaults: triplet variants train 2000 epochs at lr 1e-4 with
/// weight decay 1e-5; the contrastive variant trains 2500 epochs at lr 1e-3
/// with batches of 18 rows.
inline TrainConfig default_train_config(Variant variant) {
  TrainConfig cfg;
  cfg.variant = variant;
  if (variant == Variant::simclr) {
    cfg.learning_rate = 1e-3;
    cfg.weight_decay = 0.0;
    cfg.epochs = 2500;
    cfg.batch_size = 18;
  }
  if (variant == Variant::custom_weights) {
    cfg.custom_weights = kDefaultCustomWeights;
  }
  return cfg;
}

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

template <class Scalar>
struct TrainResult {
  Model<Scalar> model;  // checkpoint with the lowest validation loss
  std::vector<TrainLogEntry> log;
  int best_epoch = 0;
};

namespace detail {

template <class Scalar>
Mat<Scalar> gather_rows(const Mat<Scalar>& X, const std::vector<int>& rows) {
  Mat<Scalar> out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  }
  return out;
}

template <class Scalar>
Scalar triplet_set_loss(const Model<Scalar>& model, const Mat<Scalar>& X,
                        const std::vector<Triplet>& triplets, Scalar margin) {
  std::vector<int> rows;
  rows.reserve(triplets.size() * 3);
  std::vector<IndexTriplet> local;
  local.reserve(triplets.size());
  for (const auto& t : triplets) {
    local.push_back(IndexTriplet{int(rows.size()), int(rows.size() + 1),
                                 int(rows.size() + 2)});
    rows.push_back(t.anchor);
    rows.push_back(t.positive);
    rows.push_back(t.negative);
  }
  const Mat<Scalar> emb = forward_batch(model, gather_rows(X, rows));
  return triplet_batch_loss(emb, local, margin).loss;
}

}  // namespace detail

/// Trains an embedding network of the given architecture. X holds one
/// normalized feature row per knot record; row_specimen names each row's
/// board so triplets and rows can be routed into the train/validation
/// splits. Triplet variants consume the triplet list; the contrastive
/// variant consumes feature rows directly. Returns the checkpoint with the
/// lowest validation loss together with the per-epoch loss log.
template <class Scalar>
TrainResult<Scalar> train(const Mat<Scalar>& X,
                          const std::vector<std::string>& row_specimen,
                          const std::vector<Triplet>& triplets,
                          const SplitAssignment& split, const TrainConfig& cfg,
                          std::vector<LayerSpec> layer_specs = {}) {
  cfg.validate();
  if (X.rows() != static_cast<Eigen::Index>(row_specimen.size())) {
    throw validation_error("train: specimen list does not match feature rows");
  }
  if (layer_specs.empty()) layer_specs = embedding_specs();

  Rng rng(cfg.seed);
  Model<Scalar> model = init_model<Scalar>(
      cfg.variant, layer_specs, rng,
      cfg.variant == Variant::simclr ? projection_specs()
                                     : std::vector<LayerSpec>{},
      cfg.custom_weights);
  AdamState<Scalar> state = AdamState<Scalar>::zeros_like(model);

  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar decay = static_cast<Scalar>(cfg.weight_decay);

  TrainResult<Scalar> result;
  result.model = model;
  Scalar best = std::numeric_limits<Scalar>::infinity();

  const bool contrastive = cfg.variant == Variant::simclr;

  std::vector<Triplet> train_triplets, val_triplets;
  std::vector<int> train_rows, val_rows;
  if (contrastive) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const auto where = split.split_of(row_specimen[std::size_t(r)]);
      if (where == SplitAssignment::Split::train) {
        train_rows.push_back(int(r));
      } else if (where == SplitAssignment::Split::validation) {
        val_rows.push_back(int(r));
      }
    }
    if (train_rows.size() < 2) {
      throw validation_error("train: not enough training rows for simclr");
    }
  } else {
    for (const auto& t : triplets) {
      const auto where = split.split_of(t.specimen_id);
      if (where == SplitAssignment::Split::train) {
        train_triplets.push_back(t);
      } else if (where == SplitAssignment::Split::validation) {
        val_triplets.push_back(t);
      }
    }
    if (train_triplets.empty()) {
      throw validation_error("train: no training triplets");
    }
  }

  const Scalar margin = static_cast<Scalar>(cfg.margin);
  const Scalar temperature = static_cast<Scalar>(cfg.temperature);

  std::vector<int> order(contrastive ? train_rows.size()
                                     : train_triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;

    for (std::size_t begin = 0; begin < order.size();
         begin += std::size_t(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + std::size_t(cfg.batch_size));
      const std::size_t n = end - begin;

      if (contrastive) {
        if (n < 2) continue;  // NT-Xent needs at least two pairs
        Mat<Scalar> Xb(Eigen::Index(2 * n), X.cols());
        for (std::size_t i = 0; i < n; ++i) {
          const RowVec<Scalar> row = X.row(train_rows[size_t(order[begin + i])]);
          Xb.row(Eigen::Index(2 * i)) = augment(row, cfg.augment, rng);
          Xb.row(Eigen::Index(2 * i + 1)) = augment(row, cfg.augment, rng);
        }
        ForwardTrace<Scalar> trace;
        const Mat<Scalar> z = forward_batch(model, Xb, ForwardMode::train,
                                            &rng, &trace, true);
        const BatchLoss<Scalar> bl = ntxent_loss(z, temperature);
        const Gradients<Scalar> grads =
            backward_batch(model, trace, bl.d_embeddings);
        adam_step(model, grads, state, lr, decay);
        loss_sum += double(bl.loss) * double(n);
        seen += n;
      } else {
        Mat<Scalar> Xb(Eigen::Index(3 * n), X.cols());
        std::vector<IndexTriplet> local(n);
        for (std::size_t i = 0; i < n; ++i) {
          const Triplet& t = train_triplets[std::size_t(order[begin + i])];
          Xb.row(Eigen::Index(3 * i)) = X.row(t.anchor);
          Xb.row(Eigen::Index(3 * i + 1)) = X.row(t.positive);
          Xb.row(Eigen::Index(3 * i + 2)) = X.row(t.negative);
          local[i] = IndexTriplet{int(3 * i), int(3 * i + 1), int(3 * i + 2)};
        }
        ForwardTrace<Scalar> trace;
        const Mat<Scalar> emb =
            forward_batch(model, Xb, ForwardMode::train, &rng, &trace);
        const BatchLoss<Scalar> bl = triplet_batch_loss(emb, local, margin);
        const Gradients<Scalar> grads =
            backward_batch(model, trace, bl.d_embeddings);
        adam_step(model, grads, state, lr, decay);
        loss_sum += double(bl.loss) * double(n);
        seen += n;
      }
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = seen ? loss_sum / double(seen) : 0.0;

    if (contrastive) {
      if (val_rows.size() >= 2) {
        double vsum = 0.0;
        std::size_t vseen = 0;
        for (std::size_t begin = 0; begin < val_rows.size();
             begin += std::size_t(cfg.batch_size)) {
          const std::size_t end =
              std::min(val_rows.size(), begin + std::size_t(cfg.batch_size));
          const std::size_t n = end - begin;
          if (n < 2) continue;
          Mat<Scalar> Xb(Eigen::Index(2 * n), X.cols());
          for (std::size_t i = 0; i < n; ++i) {
            const RowVec<Scalar> row = X.row(val_rows[begin + i]);
            Xb.row(Eigen::Index(2 * i)) = augment(row, cfg.augment, rng);
            Xb.row(Eigen::Index(2 * i + 1)) = augment(row, cfg.augment, rng);
          }
          const Mat<Scalar> z =
              forward_batch(model, Xb, ForwardMode::infer, nullptr, nullptr,
                            true);
          vsum += double(ntxent_loss(z, temperature).loss) * double(n);
          vseen += n;
        }
        if (vseen) entry.val_loss = vsum / double(vseen);
      }
    } else if (!val_triplets.empty()) {
      entry.val_loss =
          double(detail::triplet_set_loss(model, X, val_triplets, margin));
    }

    const Scalar select = static_cast<Scalar>(
        entry.val_loss ? *entry.val_loss : entry.train_loss);
    if (select < best) {
      best = select;
      result.model = model;
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
  }

  if (result.best_epoch == 0) {  // nothing improved on +inf: keep last state
    result.model = model;
    result.best_epoch = cfg.epochs;
  }
  return result;
}

inline void write_training_log_csv(const std::string& path,
                                   const std::vector<TrainLogEntry>& log,
                                   const std::string& config_echo = {}) {
  CsvWriter w(path);
  if (!config_echo.empty()) w.comment(config_echo);
  w.row({"epoch", "train_loss", "val_loss"});
  for (const auto& e : log) {
    w.row({format_int(e.epoch), format_double(e.train_loss),
           e.val_loss ? format_double(*e.val_loss) : ""});
  }
  w.close();
}

}  // namespace knotpair
