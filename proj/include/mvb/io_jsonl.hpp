#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvb/bootstrap.hpp"

namespace mvb {

/// Per-frame triangulation records, one JSON object per line:
///   {"frame": f, "score": s, "keypoints": [null | {...} x21]}
/// where a resolved keypoint object carries keypoint, position, inliers,
/// inlier_confidences and mean_reproj_error. Unresolved keypoints serialize
/// as null and load back as NoConsensus. Numbers round-trip exactly.
std::string triangulation_jsonl_line(const FrameRecord& record);
FrameRecord parse_triangulation_line(const std::string& line, long line_number = 0);
void save_triangulation_jsonl(const std::filesystem::path& path,
                              std::span<const FrameRecord> records);
std::vector<FrameRecord> load_triangulation_jsonl(const std::filesystem::path& path);

/// Training labels, one JSON object per line:
///   {"frame": f, "view": v, "labels": [[x, y] | null x21], "weights": [0|1 x21]}
std::string label_jsonl_line(const LabeledTrainingExample& example);
LabeledTrainingExample parse_label_line(const std::string& line, long line_number = 0);
void save_labels_jsonl(const std::filesystem::path& path,
                       std::span<const LabeledTrainingExample> examples);
std::vector<LabeledTrainingExample> load_labels_jsonl(const std::filesystem::path& path);

}  // namespace mvb
