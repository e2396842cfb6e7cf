#pragma once

#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "knotpair/csv.hpp"
#include "knotpair/errors.hpp"
#include "knotpair/records.hpp"

namespace knotpair {

/// Parses one detection label file: "class xc yc w h" per line, normalized
/// decimals. The class token is parsed but ignored (single-class detector).
inline std::vector<DetectionRecord> parse_detection_file(
    std::istream& in, const FrameMeta& frame) {
  frame.validate();
  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  const std::string name = frame.specimen_id + "_" +
                           std::to_string(frame.surface) + "_" +
                           std::to_string(frame.frame_index);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    const std::string where = name + " line " + std::to_string(line_no);
    if (tokens.size() != 5) {
      throw format_error(where + ": expected 5 tokens, got " +
                         std::to_string(tokens.size()));
    }
    parse_double(tokens[0], where);  // class id, discarded
    DetectionRecord det;
    det.frame = frame;
    det.x_center = parse_double(tokens[1], where);
    det.y_center = parse_double(tokens[2], where);
    det.box_width = parse_double(tokens[3], where);
    det.box_height = parse_double(tokens[4], where);
    try {
      det.validate();
    } catch (const validation_error& e) {
      throw format_error(where + ": " + e.what());
    }
    out.push_back(std::move(det));
  }
  return out;
}

inline std::vector<DetectionRecord> parse_detection_text(
    const std::string& text, const FrameMeta& frame) {
  std::istringstream in(text);
  return parse_detection_file(in, frame);
}

/// Distance from board start to knot center along the board axis. Frames are
/// 1-based; frame n starts at (n-1) * advance and the detector places the
/// knot x_center of the way into the frame's imaged length.
inline double longitudinal_coordinate(const DetectionRecord& det) {
  const auto& f = det.frame;
  return (f.frame_index - 1) * f.frame_advance_mm +
         det.x_center * f.frame_length_mm;
}

/// One row of the measurements file: physical attributes keyed to a
/// detection by (specimen, surface, frame, ordinal). Ordinal is the 0-based
/// line position of the detection within its frame's label file.
struct MeasurementRow {
  std::string specimen_id;
  int surface = 0;
  int frame = 0;
  int ordinal = 0;
  std::optional<int> knot_id;
  double k1_mm = 0.0;
  double k2_mm = 0.0;
  double d_min_mm = 0.0;
  double d_max_mm = 0.0;
  std::optional<double> dist_center_mm;
  int knot_type = 0;
  int pith_location = 0;
};

inline const std::vector<std::string>& measurements_header() {
  static const std::vector<std::string> h = {
      "specimen_id", "surface",  "frame",          "ordinal",
      "knot_id",     "k1_mm",    "k2_mm",          "d_min_mm",
      "d_max_mm",    "dist_center_mm", "knot_type", "pith_location"};
  return h;
}

inline std::vector<MeasurementRow> load_measurements_csv(
    const std::string& path) {
  const CsvTable table = read_csv_file(path);
  require_header(table, measurements_header(), path);
  std::vector<MeasurementRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string where = path + " row " + std::to_string(i + 1);
    MeasurementRow m;
    m.specimen_id = r[0];
    m.surface = static_cast<int>(parse_int(r[1], where));
    m.frame = static_cast<int>(parse_int(r[2], where));
    m.ordinal = static_cast<int>(parse_int(r[3], where));
    if (auto id = parse_optional_int(r[4], where)) m.knot_id = int(*id);
    m.k1_mm = parse_double(r[5], where);
    m.k2_mm = parse_double(r[6], where);
    m.d_min_mm = parse_double(r[7], where);
    m.d_max_mm = parse_double(r[8], where);
    m.dist_center_mm = parse_optional_double(r[9], where);
    m.knot_type = static_cast<int>(parse_int(r[10], where));
    m.pith_location = static_cast<int>(parse_int(r[11], where));
    rows.push_back(std::move(m));
  }
  return rows;
}

inline const std::vector<std::string>& boards_header() {
  static const std::vector<std::string> h = {"specimen_id", "length_mm",
                                             "width_mm", "thickness_mm"};
  return h;
}

inline std::vector<BoardGeometry> load_boards_csv(const std::string& path) {
  const CsvTable table = read_csv_file(path);
  require_header(table, boards_header(), path);
  std::vector<BoardGeometry> boards;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string where = path + " row " + std::to_string(i + 1);
    BoardGeometry b;
    b.specimen_id = r[0];
    b.length_mm = parse_double(r[1], where);
    b.width_mm = parse_double(r[2], where);
    b.thickness_mm = parse_double(r[3], where);
    b.validate();
    boards.push_back(std::move(b));
  }
  return boards;
}

/// Joins detections with their measurement rows into validated KnotRecords.
/// Detections are keyed by (specimen, surface, frame, ordinal-within-frame);
/// duplicate measurement keys are rejected, missing ones reported by key.
/// Measurement rows with no matching detection are ignored (their frames may
/// have been filtered out upstream).
inline std::vector<KnotRecord> assemble_knot_records(
    const std::vector<DetectionRecord>& detections,
    const std::vector<MeasurementRow>& measurements,
    const BoardGeometry& board) {
  board.validate();
  using Key = std::tuple<std::string, int, int, int>;
  auto key_name = [](const Key& k) {
    return std::get<0>(k) + "/s" + std::to_string(std::get<1>(k)) + "/f" +
           std::to_string(std::get<2>(k)) + "/o" +
           std::to_string(std::get<3>(k));
  };

  std::map<Key, const MeasurementRow*> by_key;
  for (const auto& m : measurements) {
    const Key key{m.specimen_id, m.surface, m.frame, m.ordinal};
    if (!by_key.emplace(key, &m).second) {
      throw validation_error("duplicate measurement row for " + key_name(key));
    }
  }

  std::map<std::tuple<std::string, int, int>, int> next_ordinal;
  std::vector<KnotRecord> records;
  records.reserve(detections.size());
  for (const auto& det : detections) {
    det.validate();
    if (det.frame.specimen_id != board.specimen_id) {
      throw validation_error("detection specimen " + det.frame.specimen_id +
                             " does not match board " + board.specimen_id);
    }
    const std::tuple<std::string, int, int> frame_key{
        det.frame.specimen_id, det.frame.surface, det.frame.frame_index};
    const int ordinal = next_ordinal[frame_key]++;
    const Key key{det.frame.specimen_id, det.frame.surface,
                  det.frame.frame_index, ordinal};
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw validation_error("no measurement row for detection " +
                             key_name(key));
    }
    const MeasurementRow& m = *it->second;
    KnotRecord rec;
    rec.specimen_id = m.specimen_id;
    rec.knot_id = m.knot_id;
    rec.surface = m.surface;
    rec.longitudinal_mm = longitudinal_coordinate(det);
    rec.k1_mm = m.k1_mm;
    rec.k2_mm = m.k2_mm;
    rec.d_min_mm = m.d_min_mm;
    rec.d_max_mm = m.d_max_mm;
    rec.dist_center_mm = m.dist_center_mm;
    rec.knot_type = m.knot_type;
    rec.pith_location = m.pith_location;
    try {
      rec.validate();
    } catch (const validation_error& e) {
      throw validation_error(std::string(e.what()) + " (at " + key_name(key) +
                             ")");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace knotpair
