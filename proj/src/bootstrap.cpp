#include "mvb/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "mvb/parallel.hpp"
#include "mvb/rng.hpp"

namespace mvb {

void FilterConfig::validate() const {
  if (min_avg_inliers < 0.0 || min_avg_confidence < 0.0 || min_avg_confidence > 1.0)
    throw InvariantError("filter: thresholds out of range");
  if (!(max_avg_reproj_error > 0.0))
    throw InvariantError("filter: max_avg_reproj_error must be positive");
  if (!(velocity_outlier_threshold > 0.0))
    throw InvariantError("filter: velocity threshold must be positive");
  if (!(bone_length_max.metacarpal > 0.0) || !(bone_length_max.proximal > 0.0) ||
      !(bone_length_max.other > 0.0))
    throw InvariantError("filter: bone length maxima must be positive");
  if (window_size < 1) throw InvariantError("filter: window_size must be >= 1");
  if (n_best < 1) throw InvariantError("filter: n_best must be >= 1");
  for (const auto& c : occluders)
    if (!(c.radius > 0.0)) throw InvariantError("filter: occluder radius must be positive");
}

int FrameRecord::valid_count() const {
  int n = 0;
  for (const auto& r : keypoints) n += r.ok() ? 1 : 0;
  return n;
}

double score_frame(const FrameRecord& frame) {
  double score = 0.0;
  for (const auto& r : frame.keypoints) {
    if (!r.ok()) continue;  // unresolved keypoints contribute nothing
    for (double c : r.point->inlier_confidences) score += c;
  }
  return score;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

FilterVerdicts apply_filters(const FrameRecord& frame, const FrameRecord* previous,
                             const FilterConfig& cfg, const CameraRig& rig,
                             const HandSkeleton& skeleton) {
  cfg.validate();
  FilterVerdicts v;

  int valid = 0;
  long inlier_total = 0;
  double confidence_total = 0.0;
  long confidence_count = 0;
  double reproj_total = 0.0;
  for (const auto& r : frame.keypoints) {
    if (!r.ok()) continue;
    ++valid;
    inlier_total += static_cast<long>(r.point->inliers.size());
    reproj_total += r.point->mean_reproj_error;
    for (double c : r.point->inlier_confidences) {
      confidence_total += c;
      ++confidence_count;
    }
  }
  v.avg_inliers = valid > 0 && inlier_total >= cfg.min_avg_inliers * valid;
  v.avg_confidence =
      confidence_count > 0 && confidence_total >= cfg.min_avg_confidence * confidence_count;
  v.reproj_error = valid > 0 && reproj_total <= cfg.max_avg_reproj_error * valid;

  // Velocity: a keypoint moving far from the median per-keypoint displacement
  // between consecutive frames marks a likely spurious triangulation.
  v.velocity = true;
  if (previous != nullptr) {
    std::vector<double> displacement;
    for (std::size_t p = 0; p < frame.keypoints.size(); ++p) {
      if (p >= previous->keypoints.size()) break;
      const auto& cur = frame.keypoints[p];
      const auto& prev = previous->keypoints[p];
      if (cur.ok() && prev.ok())
        displacement.push_back((cur.point->position - prev.point->position).norm());
    }
    if (!displacement.empty()) {
      const double med = median(displacement);
      for (double d : displacement)
        if (std::abs(d - med) > cfg.velocity_outlier_threshold) {
          v.velocity = false;
          break;
        }
    }
  }

  v.bone_length = true;
  for (const auto& bone : skeleton.bones) {
    const auto& a = frame.keypoints[bone.parent];
    const auto& b = frame.keypoints[bone.child];
    if (!a.ok() || !b.ok()) continue;
    const double len = (a.point->position - b.point->position).norm();
    if (len > cfg.bone_length_max.of(bone.cls)) {
      v.bone_length = false;
      break;
    }
  }

  // Occlusion: an inlier whose viewing ray passes through an occluder cannot
  // be a legitimate observation of the keypoint.
  v.occlusion = true;
  for (const auto& r : frame.keypoints) {
    if (!r.ok()) continue;
    for (int view_id : r.point->inliers) {
      const Vec3 c = rig.by_id(view_id).center();
      for (const auto& occ : cfg.occluders)
        if (segment_intersects_capsule(c, r.point->position, occ)) {
          v.occlusion = false;
          break;
        }
      if (!v.occlusion) break;
    }
    if (!v.occlusion) break;
  }
  return v;
}

std::vector<int> select_best_per_window(std::span<const FrameRecord> frames,
                                        const FilterConfig& cfg) {
  cfg.validate();
  struct Winner {
    int position = -1;
    double score = 0.0;
    int frame = 0;
  };
  std::vector<Winner> winners;
  for (int i = 0; i < static_cast<int>(frames.size()); ++i) {
    const auto& rec = frames[i];
    if (!rec.verdicts.all()) continue;
    const int window = rec.frame / cfg.window_size;
    while (static_cast<int>(winners.size()) <= window) winners.push_back({});
    auto& w = winners[window];
    if (w.position < 0 || rec.score > w.score ||
        (rec.score == w.score && rec.frame < w.frame)) {
      w = {i, rec.score, rec.frame};
    }
  }
  std::vector<Winner> picked;
  for (const auto& w : winners)
    if (w.position >= 0) picked.push_back(w);
  std::sort(picked.begin(), picked.end(), [](const Winner& a, const Winner& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.frame < b.frame;
  });
  std::vector<int> out;
  out.reserve(picked.size());
  for (const auto& w : picked) out.push_back(w.position);
  return out;
}

namespace {

bool label_visible(const CameraView& cam, const Vec3& X, std::span<const Capsule> occluders) {
  const auto uv = try_project(cam, X);
  if (!uv) return false;
  if (uv->x() < 0.0 || uv->x() >= cam.image_width || uv->y() < 0.0 ||
      uv->y() >= cam.image_height)
    return false;
  const Vec3 c = cam.center();
  for (const auto& occ : occluders)
    if (segment_intersects_capsule(c, X, occ)) return false;
  return true;
}

}  // namespace

std::vector<LabeledTrainingExample> emit_labels(std::span<const int> selected,
                                                std::span<const FrameRecord> frames,
                                                const CameraRig& rig, const FilterConfig& cfg) {
  std::vector<LabeledTrainingExample> out;
  for (int pos : selected) {
    const auto& rec = frames[pos];
    for (const auto& cam : rig.cameras) {
      LabeledTrainingExample ex;
      ex.frame = rec.frame;
      ex.view = cam.id;
      int labeled = 0;
      for (std::size_t p = 0; p < rec.keypoints.size(); ++p) {
        const auto& r = rec.keypoints[p];
        if (!r.ok()) continue;
        if (!label_visible(cam, r.point->position, cfg.occluders)) continue;
        ex.labels[p] = project(cam, r.point->position);
        ex.weights[p] = 1;
        ++labeled;
      }
      if (labeled > 0) out.push_back(std::move(ex));
    }
  }
  return out;
}

BootstrapResult run_bootstrap(const SyntheticScene& scene, DetectorQualityState state,
                              const BootstrapConfig& cfg) {
  cfg.ransac.validate();
  cfg.filter.validate();
  if (cfg.iterations < 1) throw InvariantError("bootstrap: need at least one iteration");
  if (state.pck_per_keypoint.size() != HandSkeleton::keypoint_count)
    throw InvariantError("bootstrap: detector state must cover 21 keypoints");

  const auto& skeleton = hand_skeleton();
  const auto& rig = scene.rig();
  const int frame_count = scene.frame_count();

  BootstrapResult result;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    DetectorModel model = cfg.detector;
    model.pck = state.pck_per_keypoint;
    model.image_width = scene.config().image_width;
    model.image_height = scene.config().image_height;
    model.rng_seed = seed_mix({cfg.detector.rng_seed, static_cast<std::uint64_t>(iter)});
    model.validate();

    std::vector<FrameRecord> records(frame_count);
    parallel_chunks(frame_count, cfg.jobs, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t f = begin; f < end; ++f) {
        FrameDetections dets;
        dets.frame = static_cast<int>(f);
        for (int v = 0; v < rig.size(); ++v) {
          const auto truth = scene.truth2d(static_cast<int>(f), v);
          const auto vis = scene.visibility(static_cast<int>(f), v);
          const auto view_dets =
              detect(model, rig.cameras[v].id, truth, static_cast<int>(f), vis);
          dets.detections.insert(dets.detections.end(), view_dets.begin(), view_dets.end());
        }
        auto& rec = records[f];
        rec.frame = static_cast<int>(f);
        rec.keypoints = triangulate_frame(dets, rig, skeleton, cfg.ransac);
        rec.score = score_frame(rec);
        rec.window = rec.frame / cfg.filter.window_size;
      }
    });
    parallel_chunks(frame_count, cfg.jobs, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t f = begin; f < end; ++f)
        records[f].verdicts = apply_filters(records[f], f > 0 ? &records[f - 1] : nullptr,
                                            cfg.filter, rig, skeleton);
    });

    auto selected = select_best_per_window(records, cfg.filter);
    if (static_cast<int>(selected.size()) > cfg.filter.n_best)
      selected.resize(cfg.filter.n_best);
    auto labels = emit_labels(selected, records, rig, cfg.filter);

    BootstrapIteration row;
    row.iteration = iter;
    row.pck_before = state.mean_pck();
    row.frames_selected = static_cast<int>(selected.size());
    row.labels_emitted = static_cast<long>(labels.size());
    trainer_update(state, row.labels_emitted, make_saturating_rule(cfg.trainer_kappa));
    row.pck_after = state.mean_pck();

    result.report.push_back(row);
    result.labels_per_iteration.push_back(std::move(labels));
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace mvb
