#pragma once

#include <string>
#include <vector>

#include "mvb/geometry.hpp"

namespace mvb {

/// A single 2D keypoint detection in one view.
struct Detection2D {
  int view = 0;      // camera id
  int keypoint = 0;  // 0..20
  Vec2 location = Vec2::Zero();
  double confidence = 0.0;  // in [0, 1]
};

/// All detections of one video frame.
struct FrameDetections {
  int frame = 0;
  std::vector<Detection2D> detections;
};

/// Reads a detections CSV with header
///   frame,view,keypoint,x,y,confidence
/// Rows may appear in any order; missing detections are simply absent rows.
/// Returns frames sorted by frame index. Throws ParseError naming the
/// offending row on malformed input.
std::vector<FrameDetections> load_detections_csv(const std::string& path);

void save_detections_csv(const std::vector<FrameDetections>& frames, const std::string& path);

}  // namespace mvb
