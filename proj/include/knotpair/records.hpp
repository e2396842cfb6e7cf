#pragma once

#include <optional>
#include <string>

#include "knotpair/errors.hpp"

namespace knotpair {

/// Surface codes: 1 top, 2 front, 3 bottom, 4 back.
inline bool valid_surface(int s) { return s >= 1 && s <= 4; }

/// Knot type codes: 1 encased, 2 loose, 3 intergrown, 4 overgrown, 5 dead.
inline bool valid_knot_type(int t) { return t >= 1 && t <= 5; }

/// Pith location codes 0..6 (0 = board contains the pith).
inline bool valid_pith_location(int p) { return p >= 0 && p <= 6; }

/// Identifies one camera frame: which board, which surface, which position
/// along the conveyor. frame_advance_mm is the belt advance between
/// consecutive frames; frame_length_mm is the physical length imaged by one
/// frame.
struct FrameMeta {
  std::string specimen_id;
  int surface = 0;
  int frame_index = 0;
  double frame_advance_mm = 0.0;
  double frame_length_mm = 0.0;

  void validate() const {
    if (!valid_surface(surface)) {
      throw validation_error("frame " + specimen_id + ": surface " +
                             std::to_string(surface) + " not in 1..4");
    }
    if (frame_index < 1) {
      throw validation_error("frame " + specimen_id + ": frame_index " +
                             std::to_string(frame_index) + " < 1");
    }
    if (!(frame_advance_mm > 0.0) || !(frame_length_mm > 0.0)) {
      throw validation_error("frame " + specimen_id +
                             ": frame advance/length must be positive");
    }
  }
};

/// One detector box in normalized frame coordinates.
struct DetectionRecord {
  FrameMeta frame;
  double x_center = 0.0;
  double y_center = 0.0;
  double box_width = 0.0;
  double box_height = 0.0;

  void validate() const {
    frame.validate();
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(x_center) || !in01(y_center)) {
      throw validation_error("detection: center outside [0,1]");
    }
    if (!(box_width > 0.0 && box_width <= 1.0) ||
        !(box_height > 0.0 && box_height <= 1.0)) {
      throw validation_error("detection: box size outside (0,1]");
    }
    if (x_center - box_width / 2 < 0.0 || x_center + box_width / 2 > 1.0 ||
        y_center - box_height / 2 < 0.0 || y_center + box_height / 2 > 1.0) {
      throw validation_error("detection: box requires clipping");
    }
  }
};

/// Physical dimensions of one board.
struct BoardGeometry {
  std::string specimen_id;
  double length_mm = 0.0;
  double width_mm = 0.0;
  double thickness_mm = 0.0;

  void validate() const {
    if (!(length_mm > 0.0 && width_mm > 0.0 && thickness_mm > 0.0)) {
      throw validation_error("board " + specimen_id +
                             ": dimensions must be positive");
    }
  }
};

/// One knot occurrence on one surface, with raw physical measurements.
/// knot_id is the ground-truth pair class; absent at inference time.
/// dist_center_mm is recorded only for surfaces where the pith appears.
struct KnotRecord {
  std::string specimen_id;
  std::optional<int> knot_id;
  int surface = 0;
  double longitudinal_mm = 0.0;
  double k1_mm = 0.0;
  double k2_mm = 0.0;
  double d_min_mm = 0.0;
  double d_max_mm = 0.0;
  std::optional<double> dist_center_mm;
  int knot_type = 0;
  int pith_location = 0;

  void validate() const {
    const std::string tag = "knot record " + specimen_id + "/" +
                            std::to_string(surface) + ": ";
    if (!valid_surface(surface)) {
      throw validation_error(tag + "surface not in 1..4");
    }
    if (knot_id && *knot_id < 0) {
      throw validation_error(tag + "knot_id < 0");
    }
    if (longitudinal_mm < 0.0) {
      throw validation_error(tag + "longitudinal_mm < 0");
    }
    if (k1_mm < 0.0 || k2_mm < k1_mm) {
      throw validation_error(tag + "need 0 <= k1 <= k2, got k1=" +
                             std::to_string(k1_mm) + " k2=" +
                             std::to_string(k2_mm));
    }
    if (!(d_min_mm > 0.0) || d_max_mm < d_min_mm) {
      throw validation_error(tag + "need 0 < d_min <= d_max");
    }
    if (dist_center_mm && *dist_center_mm < 0.0) {
      throw validation_error(tag + "dist_center_mm < 0");
    }
    if (!valid_knot_type(knot_type)) {
      throw validation_error(tag + "knot_type not in 1..5");
    }
    if (!valid_pith_location(pith_location)) {
      throw validation_error(tag + "pith_location not in 0..6");
    }
  }
};

}  // namespace knotpair
