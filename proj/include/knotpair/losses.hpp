#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "knotpair/errors.hpp"
#include "knotpair/network.hpp"
#include "knotpair/rng.hpp"

namespace knotpair {

/// Hinge on the anchor-positive vs anchor-negative distance gap:
/// max(||a-p|| - ||a-n|| + margin, 0), Euclidean.
template <class Scalar, class DerivedA, class DerivedP, class DerivedN>
Scalar triplet_loss(const Eigen::MatrixBase<DerivedA>& a,
                    const Eigen::MatrixBase<DerivedP>& p,
                    const Eigen::MatrixBase<DerivedN>& n, Scalar margin) {
  if (a.size() != p.size() || a.size() != n.size()) {
    throw validation_error("triplet_loss: embedding dimensions differ");
  }
  const Scalar d_ap = (a - p).norm();
  const Scalar d_an = (a - n).norm();
  return std::max<Scalar>(d_ap - d_an + margin, Scalar(0));
}

/// Rows of a batch embedding matrix forming one triplet.
struct IndexTriplet {
  int anchor = 0;
  int positive = 0;
  int negative = 0;
};

template <class Scalar>
struct BatchLoss {
  Scalar loss = 0;            // mean over the batch
  Mat<Scalar> d_embeddings;   // dLoss/dEmbeddings, same shape as input
};

/// Mean triplet loss over a batch plus its gradient w.r.t. the embeddings.
/// The hinge subgradient at the kink is 0 (a satisfied triplet contributes
/// nothing), and a zero distance contributes a zero direction.
template <class Scalar>
BatchLoss<Scalar> triplet_batch_loss(const Mat<Scalar>& emb,
                                     const std::vector<IndexTriplet>& triplets,
                                     Scalar margin) {
  BatchLoss<Scalar> result;
  result.d_embeddings = Mat<Scalar>::Zero(emb.rows(), emb.cols());
  if (triplets.empty()) return result;

  const Scalar inv_n = Scalar(1) / Scalar(triplets.size());
  Scalar total = 0;
  for (const auto& t : triplets) {
    const auto a = emb.row(t.anchor);
    const auto p = emb.row(t.positive);
    const auto n = emb.row(t.negative);
    const RowVec<Scalar> ap = a - p;
    const RowVec<Scalar> an = a - n;
    const Scalar d_ap = ap.norm();
    const Scalar d_an = an.norm();
    const Scalar loss = d_ap - d_an + margin;
    if (loss <= Scalar(0)) continue;
    total += loss;
    RowVec<Scalar> u_ap = RowVec<Scalar>::Zero(emb.cols());
    RowVec<Scalar> u_an = RowVec<Scalar>::Zero(emb.cols());
    if (d_ap > Scalar(0)) u_ap = ap / d_ap;
    if (d_an > Scalar(0)) u_an = an / d_an;
    result.d_embeddings.row(t.anchor) += inv_n * (u_ap - u_an);
    result.d_embeddings.row(t.positive) -= inv_n * u_ap;
    result.d_embeddings.row(t.negative) += inv_n * u_an;
  }
  result.loss = total * inv_n;
  return result;
}

/// NT-Xent over a batch of 2N embeddings laid out as N adjacent augmented
/// pairs (rows 2k and 2k+1 are views of the same sample). For each row the
/// cross-entropy of its partner against all other rows (self excluded) is
/// computed on cosine similarities scaled by the temperature, then averaged
/// over the 2N rows.
template <class Scalar>
BatchLoss<Scalar> ntxent_loss(const Mat<Scalar>& emb, Scalar temperature) {
  const Eigen::Index m = emb.rows();
  if (m < 4 || m % 2 != 0) {
    throw validation_error("ntxent_loss: need 2N rows with N >= 2");
  }
  if (!(temperature > Scalar(0))) {
    throw validation_error("ntxent_loss: temperature must be positive");
  }

  Mat<Scalar> unit(m, emb.cols());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar nrm = emb.row(i).norm();
    if (!(nrm > Scalar(0))) {
      throw validation_error("ntxent_loss: zero-norm embedding row " +
                             std::to_string(i));
    }
    norms(i) = nrm;
    unit.row(i) = emb.row(i) / nrm;
  }

  Mat<Scalar> sim = (unit * unit.transpose()) / temperature;

  // Row-wise softmax over k != i, with the partner as the target class.
  Mat<Scalar> soft(m, m);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index partner = i ^ 1;
    Scalar row_max = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = 0; k < m; ++k) {
      if (k != i) row_max = std::max(row_max, sim(i, k));
    }
    Scalar denom = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
      soft(i, k) = k == i ? Scalar(0) : std::exp(sim(i, k) - row_max);
      denom += soft(i, k);
    }
    soft.row(i) /= denom;
    total += -(sim(i, partner) - row_max) + std::log(denom);
  }

  const Scalar inv_m = Scalar(1) / Scalar(m);
  BatchLoss<Scalar> result;
  result.loss = total * inv_m;

  // dL/d(sim) is softmax minus the one-hot partner; sim is symmetric in the
  // unit vectors so both orientations contribute.
  Mat<Scalar> g = soft;
  for (Eigen::Index i = 0; i < m; ++i) g(i, i ^ 1) -= Scalar(1);
  Mat<Scalar> d_unit =
      (inv_m / temperature) * ((g + g.transpose()) * unit);

  // Back through the normalization u = z / ||z||.
  result.d_embeddings.resize(m, emb.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar proj = d_unit.row(i).dot(unit.row(i));
    result.d_embeddings.row(i) =
        (d_unit.row(i) - proj * unit.row(i)) / norms(i);
  }
  return result;
}

/// SimCLR-style augmentation knobs for feature vectors.
struct AugmentConfig {
  double noise_sigma = 0.05;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double drop_prob = 0.1;
};

/// Per-feature Gaussian noise, then one uniform scale for the whole vector,
/// then independent feature dropping. Draw order is pinned for determinism.
template <class Scalar>
RowVec<Scalar> augment(const RowVec<Scalar>& x, const AugmentConfig& cfg,
                       Rng& rng) {
  RowVec<Scalar> out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) += static_cast<Scalar>(normal(rng, cfg.noise_sigma));
  }
  const Scalar scale =
      static_cast<Scalar>(uniform_range(rng, cfg.scale_min, cfg.scale_max));
  out *= scale;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (uniform_unit(rng) < cfg.drop_prob) out(i) = Scalar(0);
  }
  return out;
}

}  // namespace knotpair
