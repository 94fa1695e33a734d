#include "mvb/io_jsonl.hpp"

#include <fstream>

#include <json.hpp>

namespace mvb {

using nlohmann::json;

namespace {

std::string context(long line_number) {
  return line_number > 0 ? "line " + std::to_string(line_number) + ": " : "";
}

json parse_object(const std::string& line, long line_number) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ParseError("jsonl: " + context(line_number) + "not a JSON object");
  return j;
}

template <typename T>
T field(const json& j, const char* key, long line_number) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError("jsonl: " + context(line_number) + "missing key '" +
                                      key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError("jsonl: " + context(line_number) + "bad value for '" + key + "'");
  }
}

template <typename Fn>
void read_lines(const std::filesystem::path& path, Fn&& per_line) {
  std::ifstream in(path);
  if (!in) throw ParseError("jsonl: cannot open " + path.string());
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    per_line(line, number);
  }
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("jsonl: cannot open " + path.string() + " for writing");
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw ParseError("jsonl: write failed on " + path.string());
}

}  // namespace

std::string triangulation_jsonl_line(const FrameRecord& record) {
  json kps = json::array();
  for (const auto& r : record.keypoints) {
    if (!r.ok()) {
      kps.push_back(nullptr);
      continue;
    }
    const auto& p = *r.point;
    kps.push_back(json{{"keypoint", p.keypoint},
                       {"position", {p.position.x(), p.position.y(), p.position.z()}},
                       {"inliers", p.inliers},
                       {"inlier_confidences", p.inlier_confidences},
                       {"mean_reproj_error", p.mean_reproj_error}});
  }
  const json j{{"frame", record.frame}, {"score", record.score}, {"keypoints", std::move(kps)}};
  return j.dump();
}

FrameRecord parse_triangulation_line(const std::string& line, long line_number) {
  const json j = parse_object(line, line_number);
  FrameRecord rec;
  rec.frame = field<int>(j, "frame", line_number);
  rec.score = field<double>(j, "score", line_number);
  const json kps = field<json>(j, "keypoints", line_number);
  if (!kps.is_array() || kps.size() != HandSkeleton::keypoint_count)
    throw ParseError("jsonl: " + context(line_number) + "keypoints must be an array of 21");
  rec.keypoints.resize(kps.size());
  for (std::size_t p = 0; p < kps.size(); ++p) {
    if (kps[p].is_null()) {
      rec.keypoints[p].outcome = TriangulationOutcome::no_consensus;
      continue;
    }
    if (!kps[p].is_object())
      throw ParseError("jsonl: " + context(line_number) + "keypoint entry must be null or object");
    TriangulatedKeypoint tk;
    tk.keypoint = field<int>(kps[p], "keypoint", line_number);
    const auto pos = field<std::vector<double>>(kps[p], "position", line_number);
    if (pos.size() != 3)
      throw ParseError("jsonl: " + context(line_number) + "position must have 3 entries");
    tk.position = Vec3(pos[0], pos[1], pos[2]);
    tk.inliers = field<std::vector<int>>(kps[p], "inliers", line_number);
    tk.inlier_confidences = field<std::vector<double>>(kps[p], "inlier_confidences", line_number);
    tk.mean_reproj_error = field<double>(kps[p], "mean_reproj_error", line_number);
    if (tk.inliers.size() != tk.inlier_confidences.size())
      throw ParseError("jsonl: " + context(line_number) + "inlier lists differ in length");
    if (tk.keypoint != static_cast<int>(p))
      throw ParseError("jsonl: " + context(line_number) + "keypoint index out of order");
    rec.keypoints[p].outcome = TriangulationOutcome::ok;
    rec.keypoints[p].point = std::move(tk);
  }
  return rec;
}

void save_triangulation_jsonl(const std::filesystem::path& path,
                              std::span<const FrameRecord> records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(triangulation_jsonl_line(r));
  write_lines(path, lines);
}

std::vector<FrameRecord> load_triangulation_jsonl(const std::filesystem::path& path) {
  std::vector<FrameRecord> out;
  read_lines(path, [&](const std::string& line, long number) {
    out.push_back(parse_triangulation_line(line, number));
  });
  return out;
}

std::string label_jsonl_line(const LabeledTrainingExample& example) {
  json labels = json::array();
  json weights = json::array();
  for (std::size_t p = 0; p < example.labels.size(); ++p) {
    if (example.labels[p])
      labels.push_back({example.labels[p]->x(), example.labels[p]->y()});
    else
      labels.push_back(nullptr);
    weights.push_back(example.weights[p]);
  }
  const json j{{"frame", example.frame},
               {"view", example.view},
               {"labels", std::move(labels)},
               {"weights", std::move(weights)}};
  return j.dump();
}

LabeledTrainingExample parse_label_line(const std::string& line, long line_number) {
  const json j = parse_object(line, line_number);
  LabeledTrainingExample ex;
  ex.frame = field<int>(j, "frame", line_number);
  ex.view = field<int>(j, "view", line_number);
  const json labels = field<json>(j, "labels", line_number);
  const json weights = field<json>(j, "weights", line_number);
  if (!labels.is_array() || labels.size() != ex.labels.size() || !weights.is_array() ||
      weights.size() != ex.weights.size())
    throw ParseError("jsonl: " + context(line_number) + "labels/weights must be arrays of 21");
  for (std::size_t p = 0; p < ex.labels.size(); ++p) {
    const int w = weights[p].is_number_integer() ? weights[p].get<int>() : -1;
    if (w != 0 && w != 1)
      throw ParseError("jsonl: " + context(line_number) + "weights must be 0 or 1");
    ex.weights[p] = w;
    if (labels[p].is_null()) {
      if (w != 0)
        throw ParseError("jsonl: " + context(line_number) + "weight 1 on a missing label");
      continue;
    }
    if (!labels[p].is_array() || labels[p].size() != 2)
      throw ParseError("jsonl: " + context(line_number) + "label entry must be [x, y] or null");
    if (w != 1)
      throw ParseError("jsonl: " + context(line_number) + "weight 0 on a present label");
    try {
      ex.labels[p] = Vec2(labels[p][0].get<double>(), labels[p][1].get<double>());
    } catch (const json::exception&) {
      throw ParseError("jsonl: " + context(line_number) + "label coordinates must be numbers");
    }
  }
  return ex;
}

void save_labels_jsonl(const std::filesystem::path& path,
                       std::span<const LabeledTrainingExample> examples) {
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  for (const auto& e : examples) lines.push_back(label_jsonl_line(e));
  write_lines(path, lines);
}

std::vector<LabeledTrainingExample> load_labels_jsonl(const std::filesystem::path& path) {
  std::vector<LabeledTrainingExample> out;
  read_lines(path, [&](const std::string& line, long number) {
    out.push_back(parse_label_line(line, number));
  });
  return out;
}

}  // namespace mvb
