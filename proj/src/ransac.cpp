#include "mvb/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "mvb/rng.hpp"

namespace mvb {

void RansacConfig::validate() const {
  if (confidence_threshold < 0.0 || confidence_threshold >= 1.0)
    throw InvariantError("ransac: confidence_threshold outside [0, 1)");
  if (!(reproj_inlier_sigma > 0.0)) throw InvariantError("ransac: sigma must be positive");
  if (min_inliers < 2) throw InvariantError("ransac: min_inliers must be >= 2");
  if (max_ransac_iterations < 1) throw InvariantError("ransac: need at least one iteration");
}

namespace {

constexpr int kFinger = HandSkeleton::finger_size;
constexpr std::uint64_t kWristStream = 0x57;

// One candidate view for a group of P keypoints (P = 1 or 4): all pixels and
// confidences present, sorted by camera id before search so enumeration order
// is deterministic regardless of input order.
struct CandidateView {
  int view = 0;
  const CameraView* cam = nullptr;
  std::vector<Vec2> pixels;
  std::vector<double> confidences;
};

// Mean reprojection error of the group's points in one view, or nullopt when
// any point fails to project.
std::optional<double> group_error(const CandidateView& cv, std::span<const Vec3> points) {
  double sum = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto uv = try_project(*cv.cam, points[p]);
    if (!uv) return std::nullopt;
    sum += (*uv - cv.pixels[p]).norm();
  }
  return sum / static_cast<double>(points.size());
}

struct Consensus {
  std::vector<int> members;  // candidate indices
  double mean_error = std::numeric_limits<double>::infinity();
  std::pair<int, int> sample{std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  std::vector<Vec3> points;

  bool better_than(const Consensus& other) const {
    if (members.size() != other.members.size()) return members.size() > other.members.size();
    if (mean_error != other.mean_error) return mean_error < other.mean_error;
    return sample < other.sample;
  }
};

// Triangulates each keypoint of the group from the subset of candidate views,
// returning nullopt when any point is degenerate.
std::optional<std::vector<Vec3>> triangulate_group(const std::vector<CandidateView>& cands,
                                                   std::span<const int> subset, int points) {
  std::vector<CameraView> cams;
  cams.reserve(subset.size());
  for (int idx : subset) cams.push_back(*cands[idx].cam);
  std::vector<Vec3> out(points);
  std::vector<Vec2> pixels(subset.size());
  for (int p = 0; p < points; ++p) {
    for (std::size_t i = 0; i < subset.size(); ++i) pixels[i] = cands[subset[i]].pixels[p];
    try {
      out[p] = triangulate_linear<double>(cams, pixels);
    } catch (const DegenerateGeometry&) {
      return std::nullopt;
    }
  }
  return out;
}

// Core search shared by the point and finger variants. `points` is 1 or 4.
std::optional<Consensus> search_consensus(const std::vector<CandidateView>& cands, int points,
                                          const RansacConfig& cfg, std::uint64_t seed) {
  const int n = static_cast<int>(cands.size());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (cands[i].view != cands[j].view) pairs.emplace_back(i, j);
  if (pairs.empty()) return std::nullopt;

  if (static_cast<int>(pairs.size()) > cfg.max_ransac_iterations) {
    Rng rng(seed);
    for (int i = 0; i < cfg.max_ransac_iterations; ++i) {
      const auto j = i + static_cast<int>(rng.below(pairs.size() - i));
      std::swap(pairs[i], pairs[j]);
    }
    pairs.resize(cfg.max_ransac_iterations);
  }

  Consensus best;
  best.members.clear();
  bool found = false;
  std::array<int, 2> subset{};
  for (const auto& [i, j] : pairs) {
    subset = {i, j};
    const auto candidate = triangulate_group(cands, subset, points);
    if (!candidate) continue;

    Consensus cur;
    cur.sample = {cands[i].view, cands[j].view};
    cur.points = *candidate;
    double err_sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto err = group_error(cands[k], cur.points);
      if (err && *err <= cfg.reproj_inlier_sigma) {
        cur.members.push_back(k);
        err_sum += *err;
      }
    }
    if (cur.members.empty()) continue;
    cur.mean_error = err_sum / static_cast<double>(cur.members.size());
    if (!found || cur.better_than(best)) {
      best = std::move(cur);
      found = true;
    }
  }
  if (!found || static_cast<int>(best.members.size()) < cfg.min_inliers) return std::nullopt;
  return best;
}

struct RefinedGroup {
  std::vector<int> members;
  std::vector<Vec3> points;
  std::vector<double> point_mean_errors;  // per keypoint, over members
  bool converged = true;
};

// Refines each point of the winning consensus over its inlier views, then
// re-derives the inlier set against the refined points. Repeats until the
// set is stable (bounded), with a final prune so that every reported member
// satisfies the sigma bound against the returned points.
std::optional<RefinedGroup> refine_consensus(const std::vector<CandidateView>& cands, int points,
                                             const Consensus& best, const RansacConfig& cfg) {
  std::vector<int> members = best.members;
  std::vector<Vec3> positions = best.points;
  bool converged = true;

  for (int round = 0; round < 3; ++round) {
    std::vector<CameraView> cams;
    cams.reserve(members.size());
    for (int idx : members) cams.push_back(*cands[idx].cam);

    converged = true;
    const auto linear = triangulate_group(cands, members, points);
    std::vector<Vec2> pixels(members.size());
    for (int p = 0; p < points; ++p) {
      for (std::size_t i = 0; i < members.size(); ++i) pixels[i] = cands[members[i]].pixels[p];
      const Vec3 init = linear ? (*linear)[p] : positions[p];
      try {
        const auto res = refine_triangulation<double>(init, cams, pixels, cfg.refine);
        positions[p] = res.position;
        converged = converged && res.converged;
      } catch (const NonPositiveDepth&) {
        positions[p] = init;  // keep the linear estimate for this point
      }
    }

    std::vector<int> next;
    for (int k = 0; k < static_cast<int>(cands.size()); ++k) {
      const auto err = group_error(cands[k], positions);
      if (err && *err <= cfg.reproj_inlier_sigma) next.push_back(k);
    }
    if (static_cast<int>(next.size()) < cfg.min_inliers) return std::nullopt;
    if (next == members) break;
    members = std::move(next);
  }

  // Prune-only pass: guarantee soundness against the final points.
  std::vector<int> sound;
  for (int idx : members) {
    const auto err = group_error(cands[idx], positions);
    if (err && *err <= cfg.reproj_inlier_sigma) sound.push_back(idx);
  }
  if (static_cast<int>(sound.size()) < cfg.min_inliers) return std::nullopt;

  RefinedGroup out;
  out.members = std::move(sound);
  out.points = std::move(positions);
  out.converged = converged;
  out.point_mean_errors.assign(points, 0.0);
  for (int p = 0; p < points; ++p) {
    double sum = 0.0;
    for (int idx : out.members)
      sum += (*try_project(*cands[idx].cam, out.points[p]) - cands[idx].pixels[p]).norm();
    out.point_mean_errors[p] = sum / static_cast<double>(out.members.size());
  }
  return out;
}

TriangulatedKeypoint make_keypoint(const std::vector<CandidateView>& cands,
                                   const RefinedGroup& refined, int keypoint, int point_index,
                                   bool converged) {
  TriangulatedKeypoint tk;
  tk.keypoint = keypoint;
  tk.position = refined.points[point_index];
  tk.mean_reproj_error = refined.point_mean_errors[point_index];
  tk.refine_converged = converged;
  std::vector<int> order = refined.members;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return cands[a].view < cands[b].view; });
  for (int idx : order) {
    tk.inliers.push_back(cands[idx].view);
    tk.inlier_confidences.push_back(cands[idx].confidences[point_index]);
  }
  return tk;
}

// Picks the candidate detection per (view, keypoint): highest confidence,
// ties broken on location so the choice never depends on input order.
bool detection_preferred(const Detection2D& a, const Detection2D& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.location.x() != b.location.x()) return a.location.x() < b.location.x();
  return a.location.y() < b.location.y();
}

std::vector<CandidateView> collect_candidates(std::span<const Detection2D> detections,
                                              std::span<const int> keypoints,
                                              const CameraRig& rig, const RansacConfig& cfg,
                                              bool* any_candidate_detection) {
  const int points = static_cast<int>(keypoints.size());
  std::map<int, std::vector<const Detection2D*>> by_view;
  *any_candidate_detection = false;
  for (const auto& det : detections) {
    int slot = -1;
    for (int p = 0; p < points; ++p)
      if (keypoints[p] == det.keypoint) slot = p;
    if (slot < 0)
      throw DomainError("ransac: detection keypoint does not belong to the requested group");
    if (!(det.confidence > cfg.confidence_threshold)) continue;
    if (!rig.has(det.view))
      throw ParseError("ransac: detection references unknown camera id " +
                       std::to_string(det.view));
    *any_candidate_detection = true;
    auto& slots = by_view[det.view];
    if (slots.empty()) slots.assign(points, nullptr);
    if (!slots[slot] || detection_preferred(det, *slots[slot])) slots[slot] = &det;
  }

  std::vector<CandidateView> cands;
  for (const auto& [view, slots] : by_view) {
    if (std::any_of(slots.begin(), slots.end(), [](const Detection2D* d) { return !d; }))
      continue;  // finger views must carry the whole group
    CandidateView cv;
    cv.view = view;
    cv.cam = &rig.by_id(view);
    for (const auto* d : slots) {
      cv.pixels.push_back(d->location);
      cv.confidences.push_back(d->confidence);
    }
    cands.push_back(std::move(cv));
  }
  return cands;  // std::map iteration: already sorted by view id
}

std::vector<PointResult> run_group(std::span<const Detection2D> detections,
                                   std::span<const int> keypoints, const CameraRig& rig,
                                   const RansacConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int points = static_cast<int>(keypoints.size());
  std::vector<PointResult> results(points);
  for (int p = 0; p < points; ++p) {
    results[p].outcome = TriangulationOutcome::insufficient_candidates;
    results[p].point.reset();
  }

  bool any = false;
  const auto cands = collect_candidates(detections, keypoints, rig, cfg, &any);
  if (cands.size() < 2) {
    // Fewer than two usable views. Distinguish "no candidate at all" from "a
    // consensus was impossible" only through the same insufficient outcome.
    return results;
  }

  const auto best = search_consensus(cands, points, cfg, seed);
  if (!best) {
    for (auto& r : results) r.outcome = TriangulationOutcome::no_consensus;
    return results;
  }
  const auto refined = refine_consensus(cands, points, *best, cfg);
  if (!refined) {
    for (auto& r : results) r.outcome = TriangulationOutcome::no_consensus;
    return results;
  }

  for (int p = 0; p < points; ++p) {
    results[p].outcome = TriangulationOutcome::ok;
    results[p].point = make_keypoint(cands, *refined, keypoints[p], p, refined->converged);
  }
  return results;
}

}  // namespace

PointResult ransac_triangulate_point(std::span<const Detection2D> detections,
                                     const CameraRig& rig, const RansacConfig& cfg) {
  const int kp = detections.empty() ? 0 : detections.front().keypoint;
  const std::array<int, 1> group{kp};
  return run_group(detections, group, rig, cfg, cfg.rng_seed)[0];
}

std::array<PointResult, kFinger> ransac_triangulate_finger(
    std::span<const Detection2D> detections, const std::array<int, kFinger>& keypoints,
    const CameraRig& rig, const RansacConfig& cfg) {
  const auto results = run_group(detections, keypoints, rig, cfg, cfg.rng_seed);
  std::array<PointResult, kFinger> out;
  std::copy_n(results.begin(), kFinger, out.begin());
  return out;
}

std::vector<PointResult> triangulate_frame(const FrameDetections& frame, const CameraRig& rig,
                                           const HandSkeleton& skeleton,
                                           const RansacConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<Detection2D>> by_keypoint(HandSkeleton::keypoint_count);
  for (const auto& det : frame.detections) {
    if (det.keypoint < 0 || det.keypoint >= HandSkeleton::keypoint_count)
      throw DomainError("triangulate_frame: keypoint out of range");
    by_keypoint[det.keypoint].push_back(det);
  }

  std::vector<PointResult> results(HandSkeleton::keypoint_count);

  {
    RansacConfig wrist_cfg = cfg;
    wrist_cfg.rng_seed = seed_mix({cfg.rng_seed, static_cast<std::uint64_t>(frame.frame),
                                   kWristStream});
    results[HandSkeleton::wrist] = ransac_triangulate_point(by_keypoint[HandSkeleton::wrist],
                                                            rig, wrist_cfg);
  }

  for (int f = 0; f < HandSkeleton::finger_count; ++f) {
    const auto& group = skeleton.fingers[f];
    std::vector<Detection2D> dets;
    for (int kp : group)
      dets.insert(dets.end(), by_keypoint[kp].begin(), by_keypoint[kp].end());
    RansacConfig finger_cfg = cfg;
    finger_cfg.rng_seed =
        seed_mix({cfg.rng_seed, static_cast<std::uint64_t>(frame.frame),
                  static_cast<std::uint64_t>(f)});
    const auto finger = ransac_triangulate_finger(dets, group, rig, finger_cfg);
    for (int k = 0; k < kFinger; ++k) results[group[k]] = finger[k];
  }
  return results;
}

}  // namespace mvb
