#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "knotpair/csv.hpp"
#include "knotpair/errors.hpp"
#include "knotpair/records.hpp"

namespace knotpair {

/// Canonical feature order. Every embedding network consumes exactly this
/// 9-tuple, and per-feature weight vectors are indexed the same way.
inline constexpr int kFeatureCount = 9;
enum FeatureIndex : int {
  kFeatSurface = 0,
  kFeatDMin = 1,
  kFeatDMax = 2,
  kFeatK1 = 3,
  kFeatK2 = 4,
  kFeatLongitudinal = 5,
  kFeatDistCenter = 6,
  kFeatKnotType = 7,
  kFeatPithType = 8,
};

inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "surface",      "d_min",       "d_max",
      "k1",           "k2",          "longitudinal",
      "dist_center",  "knot_type",   "pith_type"};
  return names;
}

struct FeatureVector {
  std::array<double, kFeatureCount> v{};

  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Transverse measurements are normalized by the board width on surfaces
/// 1 and 3 (top/bottom) and by the thickness on surfaces 2 and 4.
inline double surface_divisor(int surface, const BoardGeometry& board) {
  board.validate();
  switch (surface) {
    case 1:
    case 3:
      return board.width_mm;
    case 2:
    case 4:
      return board.thickness_mm;
    default:
      throw validation_error("surface_divisor: surface " +
                             std::to_string(surface) + " not in 1..4");
  }
}

/// Builds the normalized 9-feature vector for one knot record. A missing
/// dist_center (pith not visible on that surface) encodes as 0.0, which is an
/// in-range sentinel. k1/k2/dist_center/longitudinal must land in [0,1]
/// after normalization; d_min/d_max share the divisor but a knot's footprint
/// may legitimately exceed it, so they are not bound-checked.
inline FeatureVector build_feature_vector(const KnotRecord& rec,
                                          const BoardGeometry& board) {
  rec.validate();
  if (rec.specimen_id != board.specimen_id) {
    throw validation_error("feature build: record specimen " +
                           rec.specimen_id + " does not match board " +
                           board.specimen_id);
  }
  const double divisor = surface_divisor(rec.surface, board);
  constexpr double kBoundEps = 1e-9;
  auto checked = [&](double value, const char* what) {
    if (value < 0.0 || value > 1.0 + kBoundEps) {
      throw validation_error("feature build " + rec.specimen_id + ": " + what +
                             " normalizes to " + std::to_string(value) +
                             ", outside [0,1] (measurement exceeds board "
                             "dimension)");
    }
    return value;
  };

  FeatureVector f;
  f.v[kFeatSurface] = rec.surface;
  f.v[kFeatDMin] = rec.d_min_mm / divisor;
  f.v[kFeatDMax] = rec.d_max_mm / divisor;
  f.v[kFeatK1] = checked(rec.k1_mm / divisor, "k1");
  f.v[kFeatK2] = checked(rec.k2_mm / divisor, "k2");
  f.v[kFeatLongitudinal] =
      checked(rec.longitudinal_mm / board.length_mm, "longitudinal");
  f.v[kFeatDistCenter] =
      rec.dist_center_mm ? checked(*rec.dist_center_mm / divisor, "dist_center")
                         : 0.0;
  f.v[kFeatKnotType] = rec.knot_type;
  f.v[kFeatPithType] = rec.pith_location;
  return f;
}

/// One row of the features file: identity columns plus the normalized vector.
struct FeatureRow {
  std::string specimen_id;
  std::optional<int> knot_id;
  FeatureVector f;
};

inline const std::vector<std::string>& features_header() {
  static const std::vector<std::string> h = {
      "specimen_id", "knot_id",      "surface",     "d_min",
      "d_max",       "k1",           "k2",          "longitudinal",
      "dist_center", "knot_type",    "pith_type"};
  return h;
}

inline void write_features_csv(const std::string& path,
                               const std::vector<FeatureRow>& rows,
                               const std::string& config_echo = {}) {
  CsvWriter w(path);
  if (!config_echo.empty()) w.comment(config_echo);
  w.row(features_header());
  for (const auto& r : rows) {
    std::vector<std::string> fields;
    fields.reserve(11);
    fields.push_back(r.specimen_id);
    fields.push_back(r.knot_id ? format_int(*r.knot_id) : "");
    for (int i = 0; i < kFeatureCount; ++i) {
      fields.push_back(format_double(r.f[i]));
    }
    w.row(fields);
  }
  w.close();
}

inline std::vector<FeatureRow> read_features_csv(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  require_header(table, features_header(), path);
  std::vector<FeatureRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string where = path + " row " + std::to_string(i + 1);
    FeatureRow row;
    row.specimen_id = r[0];
    if (auto id = parse_optional_int(r[1], where)) row.knot_id = int(*id);
    for (int k = 0; k < kFeatureCount; ++k) {
      row.f.v[static_cast<std::size_t>(k)] =
          parse_double(r[2 + static_cast<std::size_t>(k)], where);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace knotpair
