#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "knotpair/csv.hpp"
#include "knotpair/errors.hpp"
#include "knotpair/rng.hpp"

namespace knotpair {

/// (anchor, positive, negative) as row indices into the feature table. All
/// three rows belong to the same specimen; anchor and positive share a knot
/// class, the negative does not.
struct Triplet {
  std::string specimen_id;
  int anchor = 0;
  int positive = 0;
  int negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// specimen -> knot class -> row indices, preserving input order inside each
/// group. Works for any record type carrying specimen_id and knot_id.
using ClassGroups = std::map<std::string, std::map<int, std::vector<int>>>;

template <class Record>
ClassGroups group_by_knot_class(const std::vector<Record>& records) {
  ClassGroups groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!rec.knot_id) {
      throw validation_error("group_by_knot_class: record " +
                             std::to_string(i) + " (" + rec.specimen_id +
                             ") has no knot_id");
    }
    groups[rec.specimen_id][*rec.knot_id].push_back(static_cast<int>(i));
  }
  return groups;
}

/// All C(n,2) unordered pairs of one class, lexicographic.
inline std::vector<std::pair<int, int>> generate_positive_pairs(
    const std::vector<int>& group) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t a = 0; a < group.size(); ++a) {
    for (std::size_t b = a + 1; b < group.size(); ++b) {
      pairs.emplace_back(group[a], group[b]);
    }
  }
  return pairs;
}

/// Uniform draw from the pool of other-class knots; nullopt when the
/// specimen has only one class (the pair is then skipped).
inline std::optional<int> sample_negative(const std::vector<int>& pool,
                                          Rng& rng) {
  if (pool.empty()) return std::nullopt;
  return pool[uniform_index(rng, pool.size())];
}

/// One triplet per positive pair, negatives sampled within the same
/// specimen, output sorted by (specimen, anchor, positive).
template <class Record>
std::vector<Triplet> build_triplets(const std::vector<Record>& records,
                                    Rng& rng) {
  const ClassGroups groups = group_by_knot_class(records);
  std::vector<Triplet> triplets;
  for (const auto& [specimen, classes] : groups) {
    for (const auto& [knot_id, members] : classes) {
      std::vector<int> pool;
      for (const auto& [other_id, other_members] : classes) {
        if (other_id == knot_id) continue;
        pool.insert(pool.end(), other_members.begin(), other_members.end());
      }
      std::sort(pool.begin(), pool.end());
      for (const auto& [a, p] : generate_positive_pairs(members)) {
        const auto neg = sample_negative(pool, rng);
        if (!neg) continue;
        triplets.push_back(Triplet{specimen, a, p, *neg});
      }
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const auto& x, const auto& y) {
    return std::tie(x.specimen_id, x.anchor, x.positive) <
           std::tie(y.specimen_id, y.anchor, y.positive);
  });
  return triplets;
}

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;

  enum class Split { train, validation, test };

  Split split_of(const std::string& specimen) const {
    if (train.count(specimen)) return Split::train;
    if (validation.count(specimen)) return Split::validation;
    if (test.count(specimen)) return Split::test;
    throw validation_error("specimen " + specimen + " missing from split");
  }
};

inline std::string split_name(SplitAssignment::Split s) {
  switch (s) {
    case SplitAssignment::Split::train: return "train";
    case SplitAssignment::Split::validation: return "validation";
    default: return "test";
  }
}

/// 8:1:1 split at specimen granularity: validation and test each take
/// floor(N/10) specimens (at least 1), the rest train. Splitting by board
/// keeps every knot class inside one split.
inline SplitAssignment split_specimens(std::vector<std::string> specimen_ids,
                                       Rng& rng) {
  const std::size_t n = specimen_ids.size();
  if (n < 3) {
    throw validation_error("split_specimens: need at least 3 specimens, got " +
                           std::to_string(n));
  }
  shuffle(specimen_ids, rng);
  const std::size_t holdout = std::max<std::size_t>(1, n / 10);
  SplitAssignment split;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < holdout) {
      split.validation.insert(specimen_ids[i]);
    } else if (i < 2 * holdout) {
      split.test.insert(specimen_ids[i]);
    } else {
      split.train.insert(specimen_ids[i]);
    }
  }
  return split;
}

inline const std::vector<std::string>& triplets_csv_header() {
  static const std::vector<std::string> h = {"specimen_id", "anchor",
                                             "positive", "negative"};
  return h;
}

inline void write_triplets_csv(const std::string& path,
                               const std::vector<Triplet>& triplets,
                               const std::string& config_echo = {}) {
  CsvWriter w(path);
  if (!config_echo.empty()) w.comment(config_echo);
  w.row(triplets_csv_header());
  for (const auto& t : triplets) {
    w.row({t.specimen_id, format_int(t.anchor), format_int(t.positive),
           format_int(t.negative)});
  }
  w.close();
}

inline std::vector<Triplet> read_triplets_csv(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  require_header(table, triplets_csv_header(), path);
  std::vector<Triplet> triplets;
  triplets.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string where = path + " row " + std::to_string(i + 1);
    triplets.push_back(Triplet{r[0], int(parse_int(r[1], where)),
                               int(parse_int(r[2], where)),
                               int(parse_int(r[3], where))});
  }
  return triplets;
}

inline const std::vector<std::string>& split_csv_header() {
  static const std::vector<std::string> h = {"specimen_id", "split"};
  return h;
}

inline void write_split_csv(const std::string& path,
                            const SplitAssignment& split,
                            const std::string& config_echo = {}) {
  CsvWriter w(path);
  if (!config_echo.empty()) w.comment(config_echo);
  w.row(split_csv_header());
  std::map<std::string, std::string> rows;
  for (const auto& s : split.train) rows[s] = "train";
  for (const auto& s : split.validation) rows[s] = "validation";
  for (const auto& s : split.test) rows[s] = "test";
  for (const auto& [specimen, name] : rows) w.row({specimen, name});
  w.close();
}

inline SplitAssignment read_split_csv(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  require_header(table, split_csv_header(), path);
  SplitAssignment split;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r[1] == "train") {
      split.train.insert(r[0]);
    } else if (r[1] == "validation") {
      split.validation.insert(r[0]);
    } else if (r[1] == "test") {
      split.test.insert(r[0]);
    } else {
      throw format_error(path + " row " + std::to_string(i + 1) +
                         ": unknown split '" + r[1] + "'");
    }
  }
  return split;
}

}  // namespace knotpair
