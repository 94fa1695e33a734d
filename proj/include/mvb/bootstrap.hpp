#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvb/calibration.hpp"
#include "mvb/detections.hpp"
#include "mvb/detector_sim.hpp"
#include "mvb/geometry.hpp"
#include "mvb/ransac.hpp"
#include "mvb/scene.hpp"
#include "mvb/skeleton.hpp"

namespace mvb {

/// Pass/fail verdict of each selection heuristic for one frame.
struct FilterVerdicts {
  bool avg_inliers = false;
  bool avg_confidence = false;
  bool reproj_error = false;
  bool velocity = false;
  bool bone_length = false;
  bool occlusion = false;

  bool all() const {
    return avg_inliers && avg_confidence && reproj_error && velocity && bone_length && occlusion;
  }
};

/// One processed video frame: 21 triangulation results plus bookkeeping.
struct FrameRecord {
  int frame = 0;
  std::vector<PointResult> keypoints;  // size 21
  double score = 0.0;
  int window = 0;
  FilterVerdicts verdicts;

  int valid_count() const;
};

struct BoneLengthMax {
  double metacarpal = 15.0;  // cm
  double proximal = 9.0;
  double other = 5.0;

  double of(BoneClass c) const {
    switch (c) {
      case BoneClass::metacarpal: return metacarpal;
      case BoneClass::proximal: return proximal;
      default: return other;
    }
  }
};

struct FilterConfig {
  double min_avg_inliers = 5.0;
  double min_avg_confidence = 0.5;
  double max_avg_reproj_error = 5.0;        // px, averaged over valid keypoints
  double velocity_outlier_threshold = 3.0;  // cm/frame deviation from the median
  BoneLengthMax bone_length_max;
  std::vector<Capsule> occluders;
  int window_size = 15;  // frames per selection window
  int n_best = 100;      // labeled frames kept per iteration

  void validate() const;
};

/// Frame score: sum over valid keypoints of the confidences of their inlier
/// detections. Higher means more and stronger multiview support.
double score_frame(const FrameRecord& frame);

/// Evaluates the selection heuristics. `previous` may be null for the first
/// frame, which passes the velocity check vacuously.
FilterVerdicts apply_filters(const FrameRecord& frame, const FrameRecord* previous,
                             const FilterConfig& cfg, const CameraRig& rig,
                             const HandSkeleton& skeleton);

/// Picks the best passing frame of each window of window_size consecutive
/// frames, then returns those frame indices sorted by descending score (ties:
/// lower frame index first).
std::vector<int> select_best_per_window(std::span<const FrameRecord> frames,
                                        const FilterConfig& cfg);

/// One training image mined from a selected frame: per-keypoint reprojected
/// labels and 0/1 weights. A label is present iff the keypoint triangulated
/// and is visible in this view (positive depth, inside the image, unblocked).
struct LabeledTrainingExample {
  int frame = 0;
  int view = 0;  // camera id
  std::array<std::optional<Vec2>, HandSkeleton::keypoint_count> labels;
  std::array<int, HandSkeleton::keypoint_count> weights{};
};

/// Reprojects the selected frames into every view where the hand is visible
/// (at least one labeled keypoint). `selected` holds indices into `frames`.
std::vector<LabeledTrainingExample> emit_labels(std::span<const int> selected,
                                                std::span<const FrameRecord> frames,
                                                const CameraRig& rig, const FilterConfig& cfg);

struct BootstrapIteration {
  int iteration = 0;
  double pck_before = 0.0;
  int frames_selected = 0;
  long labels_emitted = 0;
  double pck_after = 0.0;
};

struct BootstrapConfig {
  RansacConfig ransac;
  FilterConfig filter;
  DetectorModel detector;  // pck is overwritten from the evolving state
  double trainer_kappa = 1000.0;
  int iterations = 3;
  int jobs = 0;  // 0 = all cores
};

struct BootstrapResult {
  std::vector<BootstrapIteration> report;
  std::vector<std::vector<LabeledTrainingExample>> labels_per_iteration;
  DetectorQualityState final_state;
};

/// Full loop: detect on the synthetic scene with the current detector
/// quality, triangulate, score, filter, select the N best windows, emit
/// reprojected labels, and update the detector quality with the label count.
BootstrapResult run_bootstrap(const SyntheticScene& scene, DetectorQualityState state,
                              const BootstrapConfig& cfg);

}  // namespace mvb
