#include "mvb/detections.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "mvb/format.hpp"
#include "mvb/skeleton.hpp"

namespace mvb {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

constexpr const char* kHeader = "frame,view,keypoint,x,y,confidence";

}  // namespace

std::vector<FrameDetections> load_detections_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("detections: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) return {};  // empty file: no frames
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw ParseError("detections: row 1: expected header '" + std::string(kHeader) + "'");

  std::map<int, FrameDetections> by_frame;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_row(line);
    const std::string where = "detections: row " + std::to_string(row);
    if (fields.size() != 6) throw ParseError(where + ": expected 6 fields, got " +
                                             std::to_string(fields.size()));
    Detection2D det;
    const long frame = parse_long(fields[0], where);
    det.view = static_cast<int>(parse_long(fields[1], where));
    det.keypoint = static_cast<int>(parse_long(fields[2], where));
    det.location.x() = parse_double(fields[3], where);
    det.location.y() = parse_double(fields[4], where);
    det.confidence = parse_double(fields[5], where);
    if (frame < 0) throw ParseError(where + ": negative frame index");
    if (det.keypoint < 0 || det.keypoint >= HandSkeleton::keypoint_count)
      throw ParseError(where + ": keypoint out of range [0, 21)");
    if (det.confidence < 0.0 || det.confidence > 1.0)
      throw ParseError(where + ": confidence outside [0, 1]");
    auto& rec = by_frame[static_cast<int>(frame)];
    rec.frame = static_cast<int>(frame);
    rec.detections.push_back(det);
  }

  std::vector<FrameDetections> frames;
  frames.reserve(by_frame.size());
  for (auto& [_, rec] : by_frame) frames.push_back(std::move(rec));
  return frames;
}

void save_detections_csv(const std::vector<FrameDetections>& frames, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("detections: cannot write " + path);
  out << kHeader << "\n";
  for (const auto& f : frames)
    for (const auto& d : f.detections)
      out << f.frame << ',' << d.view << ',' << d.keypoint << ',' << format_double(d.location.x())
          << ',' << format_double(d.location.y()) << ',' << format_double(d.confidence) << "\n";
}

}  // namespace mvb
