#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mvb/calibration.hpp"
#include "mvb/geometry.hpp"
#include "mvb/skeleton.hpp"

namespace mvb {

/// Parameters of a synthetic capture: cameras on a ring around the origin
/// (alternating elevation bands so views are not coplanar), an animated hand
/// near the origin, and optional capsule occluders between hand and cameras.
struct SceneConfig {
  int views = 31;
  int frames = 900;
  int image_width = 1920;
  int image_height = 1080;
  double focal = 1400.0;
  double ring_radius_cm = 200.0;
  double min_elevation_deg = 8.0;
  double max_elevation_deg = 38.0;
  double motion_translation_cm = 8.0;  // amplitude of the hand's drift
  double motion_rotation_deg = 50.0;   // amplitude of the hand's wobble
  std::uint64_t seed = 7;
  std::vector<Capsule> occluders;

  void validate() const;
};

/// Deterministic synthetic capture; every query is a pure function of the
/// config and the frame index.
class SyntheticScene {
 public:
  explicit SyntheticScene(SceneConfig cfg);

  const SceneConfig& config() const { return cfg_; }
  const CameraRig& rig() const { return rig_; }
  int frame_count() const { return cfg_.frames; }
  const std::vector<Capsule>& occluders() const { return cfg_.occluders; }

  /// Ground-truth 3D keypoints (cm) at a frame; bone lengths are constant
  /// over time and respect the per-class anatomical maxima.
  std::array<Vec3, HandSkeleton::keypoint_count> truth3d(int frame) const;

  /// Ground-truth projections into one view (by camera index, not id).
  std::vector<Vec2> truth2d(int frame, int camera_index) const;

  /// Whether a keypoint is seen by a camera: positive depth, inside the
  /// image, and the camera-to-point segment clears every occluder.
  bool visible(int frame, int camera_index, int keypoint) const;
  std::vector<std::uint8_t> visibility(int frame, int camera_index) const;

 private:
  SceneConfig cfg_;
  CameraRig rig_;
  std::array<Vec3, HandSkeleton::keypoint_count> template_;
  std::array<double, HandSkeleton::finger_count> finger_phase_;
  double motion_phase_ = 0.0;
};

/// Cameras on a ring of the given radius looking at the origin, with
/// elevations cycling through bands between the configured limits.
CameraRig make_camera_ring(int views, double radius_cm, double focal, int width, int height,
                           double min_elevation_deg = 8.0, double max_elevation_deg = 38.0);

}  // namespace mvb
