#include "mvb/calibration.hpp"

#include <fstream>

#include <json.hpp>

namespace mvb {

using nlohmann::json;

CameraRig CameraRig::from(std::vector<CameraView> cams) {
  CameraRig rig;
  rig.cameras = std::move(cams);
  for (int i = 0; i < static_cast<int>(rig.cameras.size()); ++i) {
    const int id = rig.cameras[i].id;
    if (!rig.index_by_id.emplace(id, i).second)
      throw ParseError("calibration: duplicate camera id " + std::to_string(id));
  }
  return rig;
}

const CameraView& CameraRig::by_id(int view_id) const {
  const auto it = index_by_id.find(view_id);
  if (it == index_by_id.end())
    throw ParseError("calibration: unknown camera id " + std::to_string(view_id));
  return cameras[it->second];
}

namespace {

Mat3 mat3_from(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.size() != 9)
    throw ParseError("calibration: " + what + " must be a 9-element row-major array");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = arr.at(3 * r + c).get<double>();
  return m;
}

}  // namespace

CameraRig load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("calibration: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError("calibration: invalid JSON in " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError("calibration: top-level value must be an array");

  std::vector<CameraView> cams;
  cams.reserve(doc.size());
  for (const auto& entry : doc) {
    try {
      CameraView cam;
      cam.id = entry.at("id").get<int>();
      cam.intrinsics = mat3_from(entry.at("K"), "K");
      cam.rotation = mat3_from(entry.at("R"), "R");
      const auto& t = entry.at("t");
      if (!t.is_array() || t.size() != 3)
        throw ParseError("calibration: t must be a 3-element array");
      for (int k = 0; k < 3; ++k) cam.translation(k) = t.at(k).get<double>();
      cam.image_width = entry.at("width").get<int>();
      cam.image_height = entry.at("height").get<int>();
      cam.validate(1e-6);
      cams.push_back(cam);
    } catch (const json::exception& e) {
      throw ParseError(std::string("calibration: malformed camera entry: ") + e.what());
    } catch (const InvariantError& e) {
      throw ParseError(std::string("calibration: ") + e.what());
    }
  }
  if (cams.size() < 2) throw ParseError("calibration: need at least 2 cameras");
  return CameraRig::from(std::move(cams));
}

void save_calibration(const CameraRig& rig, const std::string& path) {
  json doc = json::array();
  for (const auto& cam : rig.cameras) {
    json k = json::array(), r = json::array(), t = json::array();
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) {
        k.push_back(cam.intrinsics(row, col));
        r.push_back(cam.rotation(row, col));
      }
    for (int i = 0; i < 3; ++i) t.push_back(cam.translation(i));
    doc.push_back({{"id", cam.id},
                   {"K", k},
                   {"R", r},
                   {"t", t},
                   {"width", cam.image_width},
                   {"height", cam.image_height}});
  }
  std::ofstream out(path);
  if (!out) throw ParseError("calibration: cannot write " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace mvb
