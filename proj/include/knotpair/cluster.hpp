#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "knotpair/errors.hpp"
#include "knotpair/network.hpp"
#include "knotpair/triplets.hpp"

namespace knotpair {

/// Symmetric pairwise Euclidean distances with an exactly zero diagonal.
struct DistanceMatrix {
  Eigen::MatrixXd d;

  int size() const { return int(d.rows()); }
};

inline DistanceMatrix pairwise_distances(const Eigen::MatrixXd& emb) {
  if (emb.rows() < 1) {
    throw validation_error("pairwise_distances: need at least one row");
  }
  const Eigen::Index n = emb.rows();
  DistanceMatrix dm;
  dm.d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (emb.row(i) - emb.row(j)).norm();
      dm.d(i, j) = dist;
      dm.d(j, i) = dist;
    }
  }
  return dm;
}

/// A clustering of one specimen's knots: disjoint, exhaustive, members
/// ascending, clusters ordered by smallest member.
struct Partition {
  std::string specimen_id;
  std::vector<std::vector<int>> clusters;
};

inline void normalize_partition(Partition& p) {
  for (auto& c : p.clusters) std::sort(c.begin(), c.end());
  std::sort(p.clusters.begin(), p.clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  int component_size(int x) { return size_[find(x)]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

inline Partition partition_from_components(UnionFind& uf, int n,
                                           const std::string& specimen_id) {
  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  Partition p;
  p.specimen_id = specimen_id;
  for (auto& [root, members] : by_root) p.clusters.push_back(std::move(members));
  normalize_partition(p);
  return p;
}

}  // namespace detail

/// Distance threshold clustering: connected components of the graph with an
/// edge wherever the distance is <= threshold (a single-linkage cut).
inline Partition cluster_at_threshold(const DistanceMatrix& dm,
                                      double threshold,
                                      const std::string& specimen_id = {}) {
  if (threshold < 0.0) {
    throw validation_error("cluster_at_threshold: negative threshold");
  }
  const int n = dm.size();
  detail::UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dm.d(i, j) <= threshold) uf.unite(i, j);
    }
  }
  return detail::partition_from_components(uf, n, specimen_id);
}

/// Fraction of ground-truth clusters reproduced exactly as predicted
/// clusters. A predicted cluster counts only when it equals a truth cluster
/// as a set.
inline double clustering_accuracy(const Partition& predicted,
                                  const Partition& truth) {
  auto flatten = [](const Partition& p) {
    std::set<int> all;
    std::size_t total = 0;
    for (const auto& c : p.clusters) {
      all.insert(c.begin(), c.end());
      total += c.size();
    }
    if (all.size() != total) {
      throw validation_error("clustering_accuracy: clusters overlap");
    }
    return all;
  };
  if (flatten(predicted) != flatten(truth)) {
    throw validation_error(
        "clustering_accuracy: predicted and truth cover different knot sets");
  }
  if (truth.clusters.empty()) return 1.0;

  std::set<std::vector<int>> predicted_sets;
  for (auto c : predicted.clusters) {
    std::sort(c.begin(), c.end());
    predicted_sets.insert(std::move(c));
  }
  std::size_t matched = 0;
  for (auto c : truth.clusters) {
    std::sort(c.begin(), c.end());
    if (predicted_sets.count(c)) ++matched;
  }
  return double(matched) / double(truth.clusters.size());
}

/// Threshold grid, inclusive of both endpoints (within step rounding).
struct ThresholdGrid {
  double start = 0.1;
  double stop = 100.0;
  double step = 0.01;

  std::size_t size() const {
    if (!(step > 0.0) || stop < start) {
      throw validation_error("threshold grid: need step > 0 and stop >= start");
    }
    return std::size_t(std::llround((stop - start) / step)) + 1;
  }

  double at(std::size_t i) const { return start + double(i) * step; }
};

/// Embeddings and ground truth for one specimen; row order defines the
/// specimen-local knot indices used by Partition.
struct SpecimenEmbeddings {
  std::string specimen_id;
  Eigen::MatrixXd emb;
  Partition truth;
};

struct ThresholdSearchResult {
  double threshold = 0.0;
  double accuracy = 0.0;
  std::vector<double> curve;  // accuracy per grid point
  ThresholdGrid grid;
};

namespace detail {

/// Single-linkage merge edges: an MST of the complete distance graph (Prim).
/// Components of the edges with weight <= t equal the components of the full
/// <=t graph, so a sweep over sorted MST edges replays the whole grid.
inline std::vector<std::pair<double, std::pair<int, int>>> mst_edges(
    const DistanceMatrix& dm) {
  const int n = dm.size();
  std::vector<std::pair<double, std::pair<int, int>>> edges;
  if (n <= 1) return edges;
  std::vector<bool> in_tree(std::size_t(n), false);
  std::vector<double> best(std::size_t(n),
                           std::numeric_limits<double>::infinity());
  std::vector<int> best_from(std::size_t(n), 0);
  in_tree[0] = true;
  for (int j = 1; j < n; ++j) {
    best[std::size_t(j)] = dm.d(0, j);
    best_from[std::size_t(j)] = 0;
  }
  for (int added = 1; added < n; ++added) {
    int pick = -1;
    double pick_dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (!in_tree[std::size_t(j)] && best[std::size_t(j)] < pick_dist) {
        pick = j;
        pick_dist = best[std::size_t(j)];
      }
    }
    in_tree[std::size_t(pick)] = true;
    edges.push_back({pick_dist, {best_from[std::size_t(pick)], pick}});
    for (int j = 0; j < n; ++j) {
      if (!in_tree[std::size_t(j)] && dm.d(pick, j) < best[std::size_t(j)]) {
        best[std::size_t(j)] = dm.d(pick, j);
        best_from[std::size_t(j)] = pick;
      }
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return edges;
}

inline std::size_t matched_truth_clusters(UnionFind& uf,
                                          const Partition& truth) {
  std::size_t matched = 0;
  for (const auto& cluster : truth.clusters) {
    const int root = uf.find(cluster.front());
    bool ok = uf.component_size(root) == int(cluster.size());
    for (std::size_t i = 1; ok && i < cluster.size(); ++i) {
      ok = uf.find(cluster[i]) == root;
    }
    matched += ok ? 1 : 0;
  }
  return matched;
}

}  // namespace detail

/// Sweeps the grid, clustering every specimen independently at each
/// threshold and micro-averaging (total matched truth clusters over total
/// truth clusters). Returns the smallest threshold attaining the maximum.
inline ThresholdSearchResult threshold_search(
    const std::vector<SpecimenEmbeddings>& specimens,
    const ThresholdGrid& grid = {}) {
  if (specimens.empty()) {
    throw validation_error("threshold_search: no specimens");
  }
  const std::size_t points = grid.size();

  struct Sweep {
    detail::UnionFind uf;
    std::vector<std::pair<double, std::pair<int, int>>> edges;
    std::size_t next_edge = 0;
    const Partition* truth;
    std::size_t matched = 0;
  };
  std::vector<Sweep> sweeps;
  std::size_t total_truth = 0;
  for (const auto& s : specimens) {
    const DistanceMatrix dm = pairwise_distances(s.emb);
    Sweep sw{detail::UnionFind(dm.size()), detail::mst_edges(dm), 0, &s.truth,
             0};
    sw.matched = detail::matched_truth_clusters(sw.uf, *sw.truth);
    total_truth += s.truth.clusters.size();
    sweeps.push_back(std::move(sw));
  }
  if (total_truth == 0) {
    throw validation_error("threshold_search: no ground-truth clusters");
  }

  ThresholdSearchResult result;
  result.grid = grid;
  result.curve.resize(points);
  std::size_t total_matched = 0;
  for (auto& sw : sweeps) total_matched += sw.matched;

  std::size_t best_index = 0;
  double best_accuracy = -1.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = grid.at(i);
    for (auto& sw : sweeps) {
      bool changed = false;
      while (sw.next_edge < sw.edges.size() &&
             sw.edges[sw.next_edge].first <= t) {
        sw.uf.unite(sw.edges[sw.next_edge].second.first,
                    sw.edges[sw.next_edge].second.second);
        ++sw.next_edge;
        changed = true;
      }
      if (changed) {
        total_matched -= sw.matched;
        sw.matched = detail::matched_truth_clusters(sw.uf, *sw.truth);
        total_matched += sw.matched;
      }
    }
    const double acc = double(total_matched) / double(total_truth);
    result.curve[i] = acc;
    if (acc > best_accuracy) {
      best_accuracy = acc;
      best_index = i;
    }
  }
  result.threshold = grid.at(best_index);
  result.accuracy = best_accuracy;
  return result;
}

/// Micro-averaged accuracy of fresh clusterings at one fixed threshold.
inline double accuracy_at_threshold(
    const std::vector<SpecimenEmbeddings>& specimens, double threshold) {
  std::size_t matched = 0, total = 0;
  for (const auto& s : specimens) {
    const Partition predicted = cluster_at_threshold(
        pairwise_distances(s.emb), threshold, s.specimen_id);
    for (auto c : s.truth.clusters) {
      std::sort(c.begin(), c.end());
      ++total;
      for (const auto& pc : predicted.clusters) {
        if (pc == c) {
          ++matched;
          break;
        }
      }
    }
  }
  if (total == 0) {
    throw validation_error("accuracy_at_threshold: no ground-truth clusters");
  }
  return double(matched) / double(total);
}

struct EvalReport {
  std::string model_name;
  double optimal_threshold = 0.0;     // searched on the validation split
  double validation_accuracy = 0.0;   // accuracy at that threshold
  double test_accuracy = 0.0;         // test split at the same threshold
  ThresholdSearchResult search;
};

/// Builds per-specimen embeddings for the validation and test splits,
/// searches the threshold on validation, and reports test accuracy at the
/// chosen threshold.
template <class Scalar>
EvalReport evaluate_split(const Model<Scalar>& model, const Mat<Scalar>& X,
                          const std::vector<std::string>& row_specimen,
                          const std::map<std::string, Partition>& truth,
                          const SplitAssignment& split,
                          const ThresholdGrid& grid = {}) {
  if (X.rows() != Eigen::Index(row_specimen.size())) {
    throw validation_error("evaluate_split: specimen list does not match rows");
  }
  std::map<std::string, std::vector<int>> rows_by_specimen;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    rows_by_specimen[row_specimen[std::size_t(r)]].push_back(int(r));
  }

  auto collect = [&](const std::set<std::string>& ids) {
    std::vector<SpecimenEmbeddings> out;
    for (const auto& id : ids) {
      const auto rows_it = rows_by_specimen.find(id);
      const auto truth_it = truth.find(id);
      if (rows_it == rows_by_specimen.end() || truth_it == truth.end()) {
        continue;
      }
      Mat<Scalar> xs(Eigen::Index(rows_it->second.size()), X.cols());
      for (std::size_t i = 0; i < rows_it->second.size(); ++i) {
        xs.row(Eigen::Index(i)) = X.row(rows_it->second[i]);
      }
      SpecimenEmbeddings se;
      se.specimen_id = id;
      se.emb = embed_all(model, xs).template cast<double>();
      se.truth = truth_it->second;
      out.push_back(std::move(se));
    }
    return out;
  };

  const auto val = collect(split.validation);
  const auto test = collect(split.test);
  if (val.empty() || test.empty()) {
    throw validation_error(
        "evaluate_split: validation or test split has no specimens with "
        "ground truth");
  }

  EvalReport report;
  report.model_name = variant_name(model.variant);
  report.search = threshold_search(val, grid);
  report.optimal_threshold = report.search.threshold;
  report.validation_accuracy = report.search.accuracy;
  report.test_accuracy = accuracy_at_threshold(test, report.optimal_threshold);
  return report;
}

}  // namespace knotpair
