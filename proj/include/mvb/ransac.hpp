#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvb/calibration.hpp"
#include "mvb/detections.hpp"
#include "mvb/geometry.hpp"
#include "mvb/skeleton.hpp"

namespace mvb {

struct RansacConfig {
  double confidence_threshold = 0.2;  // candidate gate on detection confidence
  double reproj_inlier_sigma = 4.0;   // pixel inlier threshold
  int min_inliers = 3;
  int max_ransac_iterations = 200;  // pair samples when not enumerating all
  std::uint64_t rng_seed = 1;
  RefineOptions refine;

  void validate() const;
};

/// A keypoint reconstructed from a consensus of views. Every listed inlier
/// view reprojects within the configured sigma (point mode: its own error,
/// finger mode: the finger-averaged error).
struct TriangulatedKeypoint {
  int keypoint = 0;
  Vec3 position = Vec3::Zero();
  std::vector<int> inliers;                // sorted camera ids
  std::vector<double> inlier_confidences;  // aligned with inliers
  double mean_reproj_error = 0.0;
  bool refine_converged = true;
};

enum class TriangulationOutcome { ok, no_consensus, insufficient_candidates };

struct PointResult {
  TriangulationOutcome outcome = TriangulationOutcome::insufficient_candidates;
  std::optional<TriangulatedKeypoint> point;

  bool ok() const { return outcome == TriangulationOutcome::ok; }
};

/// RANSAC over view pairs for a single keypoint. Detections must all carry
/// the same keypoint index; candidates are detections with confidence above
/// the threshold. All pairs are enumerated when their count is within
/// max_ransac_iterations, otherwise that many pairs are sampled uniformly
/// without replacement. Ties are broken by lower mean inlier error, then by
/// lexicographically smaller (view, view) sample. The best consensus is
/// refined and the inlier set re-derived against the refined point.
PointResult ransac_triangulate_point(std::span<const Detection2D> detections,
                                     const CameraRig& rig, const RansacConfig& cfg);

/// Shared-consensus RANSAC for one finger (4 keypoints). A view is a
/// candidate only when all four keypoints are detected above the confidence
/// threshold, and it is an inlier only when the mean reprojection error of
/// the four points stays within sigma. Points are refined independently over
/// the shared inlier set. Returns one result per keypoint in the order given.
std::array<PointResult, HandSkeleton::finger_size> ransac_triangulate_finger(
    std::span<const Detection2D> detections,
    const std::array<int, HandSkeleton::finger_size>& keypoints, const CameraRig& rig,
    const RansacConfig& cfg);

/// Full-frame triangulation: the wrist runs per-point RANSAC, each finger
/// runs the grouped variant. Per-group RNG seeds are derived from the config
/// seed and the frame index, so results are independent of evaluation order.
/// Returns 21 results ordered by keypoint index.
std::vector<PointResult> triangulate_frame(const FrameDetections& frame, const CameraRig& rig,
                                           const HandSkeleton& skeleton,
                                           const RansacConfig& cfg);

}  // namespace mvb
