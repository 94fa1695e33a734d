#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvb/bootstrap.hpp"
#include "mvb/calibration.hpp"
#include "mvb/detections.hpp"
#include "mvb/geometry.hpp"
#include "mvb/skeleton.hpp"

namespace mvb {

/// One prediction/truth pair with the per-example normalization scale.
struct MatchedKeypoint {
  Vec2 prediction = Vec2::Zero();
  Vec2 truth = Vec2::Zero();
  double scale = 1.0;  // e.g. 0.7 * head size, in pixels
  int keypoint = 0;
};

/// Fraction of pairs with ||prediction - truth|| < sigma * scale.
/// Throws EmptyTestSet when samples is empty, DomainError on a non-positive
/// scale.
double pck(std::span<const MatchedKeypoint> samples, double sigma);

/// PCK over a threshold sweep, overall and split by joint class. A class
/// absent from the samples keeps count 0 and an all-zero column.
struct PckCurve {
  std::vector<double> thresholds;
  std::vector<double> overall;
  std::array<std::vector<double>, 5> by_class;  // indexed by JointClass
  std::array<long, 5> class_counts{};

  void validate() const;  // monotone in sigma, values in [0,1]
};

PckCurve pck_curves(std::span<const MatchedKeypoint> samples, std::span<const double> thresholds,
                    const HandSkeleton& skeleton = hand_skeleton());

/// CSV with header sigma,overall,wrist,mcp,pip,dip,tip; columns of classes
/// with no samples are left empty.
std::string pck_curve_csv(const PckCurve& curve);

/// Local coordinate frame of a hand pose: origin at the wrist, x toward the
/// middle-finger knuckle, z along the palm normal, y completing a
/// right-handed basis. Throws DomainError when the defining points are
/// collinear or coincident.
struct HandFrame {
  Vec3 origin = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // rows are the x, y, z unit axes
};

HandFrame hand_local_frame(std::span<const Vec3> keypoints);

/// Azimuth (degrees in [-180, 180), +180 wraps to -180) and elevation
/// (degrees in [-90, 90]) of a camera center seen from the hand frame.
std::pair<double, double> view_angles(const HandFrame& frame, const Vec3& camera_center);

/// Inlier/outlier tallies of one (frame, view) pair at the view's angles.
struct ViewAngleSample {
  double phi_deg = 0.0;
  double theta_deg = 0.0;
  long outliers = 0;
  long total = 0;
};

struct ViewAngleBin {
  double phi_lo = 0.0;
  double phi_hi = 0.0;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  long outliers = 0;
  long total = 0;

  double fraction() const { return total > 0 ? static_cast<double>(outliers) / total : 0.0; }
};

/// Aggregates samples on a fixed angular grid covering the full sphere.
/// bin_deg must divide 360 and 180. Bins are emitted in row-major order,
/// azimuth fastest, including empty ones (total = 0).
std::vector<ViewAngleBin> view_angle_heatmap(std::span<const ViewAngleSample> samples,
                                             double bin_deg = 20.0);

/// CSV with header phi_lo,phi_hi,theta_lo,theta_hi,outliers,total,fraction.
std::string heatmap_csv(std::span<const ViewAngleBin> bins);

/// Labels every detection of a triangulated keypoint inlier/outlier against
/// the accepted reconstruction and tallies per (frame, view). Frames whose
/// wrist or knuckle keypoints failed to triangulate are skipped (no local
/// frame). Detections are matched to records by frame index.
std::vector<ViewAngleSample> collect_view_angle_samples(std::span<const FrameRecord> records,
                                                        std::span<const FrameDetections> dets,
                                                        const CameraRig& rig);

/// Square crop around a hand inferred from body keypoints: the hand center
/// extends past the wrist by 0.15 of the forearm, and the square side is
/// 2.2 times 0.7 of the head length. Throws DegenerateArm when wrist and
/// elbow coincide, DomainError when head_length is not positive.
struct SquareBox {
  Vec2 center = Vec2::Zero();
  double side = 0.0;
};

SquareBox hand_bbox_from_body(const Vec2& wrist, const Vec2& elbow, double head_length);

}  // namespace mvb
