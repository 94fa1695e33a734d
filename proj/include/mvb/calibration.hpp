#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mvb/geometry.hpp"

namespace mvb {

/// A calibrated multi-camera setup with id-based lookup.
struct CameraRig {
  std::vector<CameraView> cameras;
  std::unordered_map<int, int> index_by_id;

  static CameraRig from(std::vector<CameraView> cams);
  const CameraView& by_id(int view_id) const;
  bool has(int view_id) const { return index_by_id.count(view_id) != 0; }
  int size() const { return static_cast<int>(cameras.size()); }
};

/// Reads a JSON array of camera objects
///   {"id": 0, "K": [9 row-major], "R": [9 row-major], "t": [3],
///    "width": 1920, "height": 1080}
/// Throws ParseError on malformed input and rejects non-orthonormal rotations
/// (tolerance 1e-6) and duplicate ids.
CameraRig load_calibration(const std::string& path);

/// Writes the same JSON format; load_calibration(save_calibration(rig)) is
/// lossless.
void save_calibration(const CameraRig& rig, const std::string& path);

}  // namespace mvb
