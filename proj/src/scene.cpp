#include "mvb/scene.hpp"

#include <cmath>
#include <numbers>

#include "mvb/error.hpp"
#include "mvb/rng.hpp"

namespace mvb {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Resting right-hand pose, cm, wrist at the origin, fingers along +x, palm
// normal along +z. Bone lengths sit comfortably below the anatomical maxima
// (metacarpal 15, proximal 9, other 5).
const std::array<Vec3, HandSkeleton::keypoint_count>& hand_template() {
  static const std::array<Vec3, HandSkeleton::keypoint_count> t = {{
      {0.0, 0.0, 0.0},     // wrist
      {3.5, -2.0, 0.5},    // thumb
      {6.5, -3.5, 1.0},
      {9.0, -4.5, 1.4},
      {11.0, -5.3, 1.8},
      {8.5, -2.5, 0.0},    // index
      {12.5, -2.7, 0.0},
      {14.7, -2.8, 0.0},
      {16.6, -2.9, 0.0},
      {8.8, 0.0, 0.0},     // middle
      {13.2, 0.1, 0.0},
      {15.7, 0.15, 0.0},
      {17.8, 0.2, 0.0},
      {8.4, 2.3, 0.0},     // ring
      {12.4, 2.6, 0.0},
      {14.8, 2.75, 0.0},
      {16.8, 2.85, 0.0},
      {7.6, 4.4, 0.0},     // little
      {10.6, 5.0, 0.0},
      {12.6, 5.4, 0.0},
      {14.3, 5.7, 0.0},
  }};
  return t;
}

Mat3 look_at_rotation(const Vec3& center) {
  const Vec3 forward = (-center).normalized();  // toward the origin
  Vec3 up(0.0, 1.0, 0.0);
  if (std::abs(forward.dot(up)) > 0.99) up = Vec3(1.0, 0.0, 0.0);
  const Vec3 x = forward.cross(up).normalized();
  const Vec3 y = forward.cross(x);
  Mat3 R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = forward;
  return R;
}

}  // namespace

CameraRig make_camera_ring(int views, double radius_cm, double focal, int width, int height,
                           double min_elevation_deg, double max_elevation_deg) {
  if (views < 2) throw DomainError("camera ring: need at least 2 views");
  if (!(radius_cm > 0.0) || !(focal > 0.0) || width <= 0 || height <= 0)
    throw DomainError("camera ring: radius, focal, and image size must be positive");

  constexpr int kBands = 4;
  std::vector<CameraView> cams;
  cams.reserve(views);
  for (int v = 0; v < views; ++v) {
    const double azimuth = 2.0 * std::numbers::pi * v / views;
    const double band = (kBands == 1) ? 0.5 : static_cast<double>(v % kBands) / (kBands - 1);
    const double elevation =
        (min_elevation_deg + band * (max_elevation_deg - min_elevation_deg)) * kDegToRad;
    const Vec3 center(radius_cm * std::cos(elevation) * std::cos(azimuth),
                      radius_cm * std::sin(elevation),
                      radius_cm * std::cos(elevation) * std::sin(azimuth));
    CameraView cam;
    cam.id = v;
    cam.intrinsics << focal, 0.0, width / 2.0, 0.0, focal, height / 2.0, 0.0, 0.0, 1.0;
    cam.rotation = look_at_rotation(center);
    cam.translation = -(cam.rotation * center);
    cam.image_width = width;
    cam.image_height = height;
    cam.validate(1e-12);
    cams.push_back(cam);
  }
  return CameraRig::from(std::move(cams));
}

void SceneConfig::validate() const {
  if (views < 2) throw InvariantError("scene: need at least 2 views");
  if (frames < 1) throw InvariantError("scene: need at least 1 frame");
  if (image_width <= 0 || image_height <= 0 || !(focal > 0.0) || !(ring_radius_cm > 0.0))
    throw InvariantError("scene: image, focal, and radius must be positive");
  if (min_elevation_deg > max_elevation_deg)
    throw InvariantError("scene: elevation band inverted");
  if (motion_translation_cm < 0.0 || motion_rotation_deg < 0.0)
    throw InvariantError("scene: negative motion amplitude");
  for (const auto& c : occluders)
    if (!(c.radius > 0.0)) throw InvariantError("scene: occluder radius must be positive");
}

SyntheticScene::SyntheticScene(SceneConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  rig_ = make_camera_ring(cfg_.views, cfg_.ring_radius_cm, cfg_.focal, cfg_.image_width,
                          cfg_.image_height, cfg_.min_elevation_deg, cfg_.max_elevation_deg);
  template_ = hand_template();
  Rng rng(seed_mix({cfg_.seed, 0xC0FFEE}));
  for (double& phase : finger_phase_) phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  motion_phase_ = rng.uniform(0.0, 2.0 * std::numbers::pi);
}

std::array<Vec3, HandSkeleton::keypoint_count> SyntheticScene::truth3d(int frame) const {
  if (frame < 0 || frame >= cfg_.frames) throw DomainError("scene: frame out of range");
  const auto& skel = hand_skeleton();
  auto points = template_;

  // Per-finger curl: rotate the sub-chain above the knuckle rigidly about a
  // lateral axis through the knuckle, preserving every bone length.
  for (int f = 0; f < HandSkeleton::finger_count; ++f) {
    const auto& finger = skel.fingers[f];
    const Vec3 knuckle = template_[finger[0]];
    const Vec3 dir = (template_[finger[1]] - knuckle).normalized();
    const Vec3 lateral = Vec3(0.0, 0.0, 1.0).cross(dir).normalized();
    const double angle = (25.0 * kDegToRad) *
                         std::sin(2.0 * std::numbers::pi * frame / 120.0 + finger_phase_[f]);
    const Eigen::AngleAxisd curl(angle, lateral);
    for (int k = 1; k < HandSkeleton::finger_size; ++k)
      points[finger[k]] = knuckle + curl * (template_[finger[k]] - knuckle);
  }

  // Global wobble and drift.
  const double t1 = 2.0 * std::numbers::pi * frame / 180.0 + motion_phase_;
  const double t2 = 2.0 * std::numbers::pi * frame / 150.0 + 0.7 * motion_phase_;
  const double amp = cfg_.motion_rotation_deg * kDegToRad;
  const Eigen::AngleAxisd yaw(amp * std::sin(t1), Vec3(0.0, 1.0, 0.0));
  const Eigen::AngleAxisd pitch(0.6 * amp * std::sin(1.3 * t1 + 1.1), Vec3(1.0, 0.0, 0.0));
  const Eigen::AngleAxisd roll(0.4 * amp * std::sin(0.7 * t1 + 2.3), Vec3(0.0, 0.0, 1.0));
  const Mat3 R = (yaw * pitch * roll).toRotationMatrix();
  const Vec3 offset(cfg_.motion_translation_cm * std::sin(t2),
                    0.5 * cfg_.motion_translation_cm * std::sin(1.7 * t2 + 0.4),
                    cfg_.motion_translation_cm * std::cos(0.9 * t2));

  // Center the template roughly on the palm so the wobble pivots naturally.
  const Vec3 pivot(9.0, 0.0, 0.0);
  for (auto& p : points) p = R * (p - pivot) + offset;
  return points;
}

std::vector<Vec2> SyntheticScene::truth2d(int frame, int camera_index) const {
  const auto& cam = rig_.cameras.at(camera_index);
  const auto points = truth3d(frame);
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& X : points) out.push_back(project(cam, X));
  return out;
}

bool SyntheticScene::visible(int frame, int camera_index, int keypoint) const {
  const auto& cam = rig_.cameras.at(camera_index);
  const auto points = truth3d(frame);
  const Vec3& X = points.at(keypoint);
  const auto uv = try_project(cam, X);
  if (!uv) return false;
  if (uv->x() < 0.0 || uv->x() >= cam.image_width || uv->y() < 0.0 ||
      uv->y() >= cam.image_height)
    return false;
  const Vec3 c = cam.center();
  for (const auto& occ : cfg_.occluders)
    if (segment_intersects_capsule(c, X, occ)) return false;
  return true;
}

std::vector<std::uint8_t> SyntheticScene::visibility(int frame, int camera_index) const {
  const auto& cam = rig_.cameras.at(camera_index);
  const auto points = truth3d(frame);
  const Vec3 c = cam.center();
  std::vector<std::uint8_t> mask(points.size(), 0);
  for (int kp = 0; kp < static_cast<int>(points.size()); ++kp) {
    const auto uv = try_project(cam, points[kp]);
    if (!uv) continue;
    if (uv->x() < 0.0 || uv->x() >= cam.image_width || uv->y() < 0.0 ||
        uv->y() >= cam.image_height)
      continue;
    bool blocked = false;
    for (const auto& occ : cfg_.occluders)
      if (segment_intersects_capsule(c, points[kp], occ)) {
        blocked = true;
        break;
      }
    mask[kp] = blocked ? 0 : 1;
  }
  return mask;
}

}  // namespace mvb
