#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mvb/calibration.hpp"
#include "mvb/detections.hpp"
#include "mvb/geometry.hpp"
#include "mvb/rng.hpp"
#include "mvb/scene.hpp"

namespace mvbtest {

using namespace mvb;

inline CameraView simple_camera(int id, double focal, double cx, double cy,
                                const Mat3& R = Mat3::Identity(),
                                const Vec3& t = Vec3::Zero(), int width = 1920,
                                int height = 1080) {
  CameraView cam;
  cam.id = id;
  cam.intrinsics << focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0;
  cam.rotation = R;
  cam.translation = t;
  cam.image_width = width;
  cam.image_height = height;
  return cam;
}

/// Ring of cameras looking at the origin; the default working volume
/// (+-20 cm around the origin) projects inside the image.
inline CameraRig test_ring(int views, double radius = 200.0, double focal = 800.0,
                           int width = 1000, int height = 1000) {
  return make_camera_ring(views, radius, focal, width, height);
}

inline Detection2D det(int view, int keypoint, const Vec2& xy, double confidence) {
  Detection2D d;
  d.view = view;
  d.keypoint = keypoint;
  d.location = xy;
  d.confidence = confidence;
  return d;
}

/// Exact detections of one 3D point in every camera of the rig.
inline std::vector<Detection2D> exact_detections(const CameraRig& rig, const Vec3& X,
                                                 int keypoint = 0, double confidence = 1.0) {
  std::vector<Detection2D> out;
  for (const auto& cam : rig.cameras)
    out.push_back(det(cam.id, keypoint, project(cam, X), confidence));
  return out;
}

/// Uniformly random rotation via normalized quaternion components.
inline Mat3 random_rotation(Rng& rng) {
  const auto [a, b] = rng.gaussian_pair();
  const auto [c, d] = rng.gaussian_pair();
  Eigen::Quaterniond q(a, b, c, d);
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_point_in_cube(Rng& rng, double half_side = 20.0) {
  return Vec3(rng.uniform(-half_side, half_side), rng.uniform(-half_side, half_side),
              rng.uniform(-half_side, half_side));
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("mvb_test_" + tag + "_" + std::to_string(++counter));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mvbtest
