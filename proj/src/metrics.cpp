#include "mvb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "mvb/format.hpp"

namespace mvb {

double pck(std::span<const MatchedKeypoint> samples, double sigma) {
  if (samples.empty()) throw EmptyTestSet("pck: no samples");
  if (!(sigma > 0.0)) throw DomainError("pck: sigma must be positive");
  long hits = 0;
  for (const auto& s : samples) {
    if (!(s.scale > 0.0)) throw DomainError("pck: non-positive scale");
    if ((s.prediction - s.truth).norm() < sigma * s.scale) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

void PckCurve::validate() const {
  if (overall.size() != thresholds.size()) throw InvariantError("pck curve: ragged overall");
  for (const auto& col : by_class)
    if (col.size() != thresholds.size()) throw InvariantError("pck curve: ragged class column");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (overall[i] < 0.0 || overall[i] > 1.0) throw InvariantError("pck curve: value outside [0, 1]");
    if (i > 0 && (thresholds[i] <= thresholds[i - 1] || overall[i] < overall[i - 1]))
      throw InvariantError("pck curve: not monotone in sigma");
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (class_counts[c] == 0) continue;
    for (std::size_t i = 1; i < by_class[c].size(); ++i)
      if (by_class[c][i] < by_class[c][i - 1])
        throw InvariantError("pck curve: class column not monotone in sigma");
  }
}

PckCurve pck_curves(std::span<const MatchedKeypoint> samples, std::span<const double> thresholds,
                    const HandSkeleton& skeleton) {
  if (samples.empty()) throw EmptyTestSet("pck: no samples");
  if (thresholds.empty()) throw DomainError("pck: no thresholds");

  PckCurve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  std::array<std::vector<const MatchedKeypoint*>, 5> grouped;
  for (const auto& s : samples) {
    if (s.keypoint < 0 || s.keypoint >= skeleton.keypoint_count)
      throw DomainError("pck: keypoint index outside skeleton");
    grouped[static_cast<int>(skeleton.joint_class(s.keypoint))].push_back(&s);
  }
  for (std::size_t c = 0; c < grouped.size(); ++c)
    curve.class_counts[c] = static_cast<long>(grouped[c].size());

  for (double sigma : thresholds) {
    curve.overall.push_back(pck(samples, sigma));
    for (std::size_t c = 0; c < grouped.size(); ++c) {
      if (grouped[c].empty()) {
        curve.by_class[c].push_back(0.0);
        continue;
      }
      long hits = 0;
      for (const auto* s : grouped[c])
        if ((s->prediction - s->truth).norm() < sigma * s->scale) ++hits;
      curve.by_class[c].push_back(static_cast<double>(hits) /
                                  static_cast<double>(grouped[c].size()));
    }
  }
  curve.validate();
  return curve;
}

std::string pck_curve_csv(const PckCurve& curve) {
  curve.validate();
  std::ostringstream out;
  out << "sigma,overall,wrist,mcp,pip,dip,tip\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    out << format_double(curve.thresholds[i]) << ',' << format_double(curve.overall[i]);
    for (std::size_t c = 0; c < curve.by_class.size(); ++c) {
      out << ',';
      if (curve.class_counts[c] > 0) out << format_double(curve.by_class[c][i]);
    }
    out << "\n";
  }
  return out.str();
}

HandFrame hand_local_frame(std::span<const Vec3> keypoints) {
  const auto& sk = hand_skeleton();
  if (static_cast<int>(keypoints.size()) != sk.keypoint_count)
    throw DomainError("hand frame: need all 21 keypoints");
  const Vec3& wrist = keypoints[sk.wrist];
  const Vec3& index_mcp = keypoints[sk.fingers[1][0]];
  const Vec3& middle_mcp = keypoints[sk.fingers[2][0]];
  const Vec3& little_mcp = keypoints[sk.fingers[4][0]];

  constexpr double kEps = 1e-12;
  Vec3 x = middle_mcp - wrist;
  if (x.norm() <= kEps) throw DomainError("hand frame: wrist coincides with middle knuckle");
  x.normalize();
  Vec3 z = (index_mcp - wrist).cross(little_mcp - wrist);
  if (z.norm() <= kEps) throw DomainError("hand frame: palm points are collinear");
  z -= z.dot(x) * x;
  if (z.norm() <= kEps) throw DomainError("hand frame: palm normal parallel to x axis");
  z.normalize();

  HandFrame frame;
  frame.origin = wrist;
  frame.axes.row(0) = x;
  frame.axes.row(1) = z.cross(x);
  frame.axes.row(2) = z;
  return frame;
}

std::pair<double, double> view_angles(const HandFrame& frame, const Vec3& camera_center) {
  const Vec3 d = frame.axes * (camera_center - frame.origin);
  const double r = d.norm();
  if (!(r > 0.0)) throw DomainError("view angles: camera at the hand origin");
  constexpr double kRad2Deg = 180.0 / std::numbers::pi;
  double phi = std::atan2(d.y(), d.x()) * kRad2Deg;
  if (phi >= 180.0) phi -= 360.0;
  const double theta = std::asin(std::clamp(d.z() / r, -1.0, 1.0)) * kRad2Deg;
  return {phi, theta};
}

std::vector<ViewAngleBin> view_angle_heatmap(std::span<const ViewAngleSample> samples,
                                             double bin_deg) {
  if (!(bin_deg > 0.0) || std::fmod(360.0, bin_deg) != 0.0 || std::fmod(180.0, bin_deg) != 0.0)
    throw DomainError("heatmap: bin size must divide 360 and 180");
  const int nphi = static_cast<int>(std::lround(360.0 / bin_deg));
  const int ntheta = static_cast<int>(std::lround(180.0 / bin_deg));

  std::vector<ViewAngleBin> bins(static_cast<std::size_t>(nphi) * ntheta);
  for (int ti = 0; ti < ntheta; ++ti)
    for (int pi = 0; pi < nphi; ++pi) {
      auto& b = bins[static_cast<std::size_t>(ti) * nphi + pi];
      b.phi_lo = -180.0 + pi * bin_deg;
      b.phi_hi = b.phi_lo + bin_deg;
      b.theta_lo = -90.0 + ti * bin_deg;
      b.theta_hi = b.theta_lo + bin_deg;
    }

  for (const auto& s : samples) {
    double phi = s.phi_deg;
    if (phi >= 180.0) phi -= 360.0;
    if (phi < -180.0 || phi >= 180.0) throw DomainError("heatmap: azimuth outside [-180, 180)");
    if (s.theta_deg < -90.0 || s.theta_deg > 90.0)
      throw DomainError("heatmap: elevation outside [-90, 90]");
    if (s.outliers < 0 || s.total < s.outliers) throw DomainError("heatmap: bad tallies");
    const int pi = std::min(nphi - 1, static_cast<int>((phi + 180.0) / bin_deg));
    const int ti = std::min(ntheta - 1, static_cast<int>((s.theta_deg + 90.0) / bin_deg));
    auto& b = bins[static_cast<std::size_t>(ti) * nphi + pi];
    b.outliers += s.outliers;
    b.total += s.total;
  }
  return bins;
}

std::string heatmap_csv(std::span<const ViewAngleBin> bins) {
  std::ostringstream out;
  out << "phi_lo,phi_hi,theta_lo,theta_hi,outliers,total,fraction\n";
  for (const auto& b : bins) {
    out << format_double(b.phi_lo) << ',' << format_double(b.phi_hi) << ','
        << format_double(b.theta_lo) << ',' << format_double(b.theta_hi) << ',' << b.outliers
        << ',' << b.total << ',' << format_double(b.fraction()) << "\n";
  }
  return out.str();
}

std::vector<ViewAngleSample> collect_view_angle_samples(std::span<const FrameRecord> records,
                                                        std::span<const FrameDetections> dets,
                                                        const CameraRig& rig) {
  std::map<int, const FrameDetections*> by_frame;
  for (const auto& fd : dets) by_frame[fd.frame] = &fd;

  std::vector<ViewAngleSample> out;
  for (const auto& rec : records) {
    const auto it = by_frame.find(rec.frame);
    if (it == by_frame.end()) continue;

    std::vector<Vec3> pose(HandSkeleton::keypoint_count, Vec3::Zero());
    bool frame_ok = true;
    const auto& sk = hand_skeleton();
    for (int p : {sk.wrist, sk.fingers[1][0], sk.fingers[2][0], sk.fingers[4][0]})
      frame_ok = frame_ok && rec.keypoints[p].ok();
    if (!frame_ok) continue;
    for (std::size_t p = 0; p < rec.keypoints.size(); ++p)
      if (rec.keypoints[p].ok()) pose[p] = rec.keypoints[p].point->position;
    const HandFrame frame = hand_local_frame(pose);

    std::map<int, ViewAngleSample> per_view;
    for (const auto& d : it->second->detections) {
      const auto& r = rec.keypoints[d.keypoint];
      if (!r.ok()) continue;
      auto [entry, inserted] = per_view.try_emplace(d.view);
      if (inserted) {
        const auto [phi, theta] = view_angles(frame, rig.by_id(d.view).center());
        entry->second.phi_deg = phi;
        entry->second.theta_deg = theta;
      }
      ++entry->second.total;
      if (!std::binary_search(r.point->inliers.begin(), r.point->inliers.end(), d.view))
        ++entry->second.outliers;
    }
    for (const auto& kv : per_view) out.push_back(kv.second);
  }
  return out;
}

SquareBox hand_bbox_from_body(const Vec2& wrist, const Vec2& elbow, double head_length) {
  if ((wrist - elbow).squaredNorm() == 0.0)
    throw DegenerateArm("hand bbox: wrist coincides with elbow");
  if (!(head_length > 0.0)) throw DomainError("hand bbox: head length must be positive");
  SquareBox box;
  box.center = wrist + 0.15 * (wrist - elbow);
  box.side = 2.2 * 0.7 * head_length;
  return box;
}

}  // namespace mvb
