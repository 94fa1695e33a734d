#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mvb/detector_sim.hpp"
#include "mvb/metrics.hpp"
#include "mvb/scene.hpp"

#include "helpers.hpp"

using namespace mvb;
using namespace mvbtest;

namespace {

MatchedKeypoint sample(const Vec2& truth, const Vec2& offset, double scale, int keypoint) {
  MatchedKeypoint s;
  s.truth = truth;
  s.prediction = truth + offset;
  s.scale = scale;
  s.keypoint = keypoint;
  return s;
}

// 21 points whose palm keypoints (wrist, index/middle/little MCP) span a
// proper frame; the rest default to zero, which the frame never reads.
std::vector<Vec3> palm_pose() {
  std::vector<Vec3> pose(HandSkeleton::keypoint_count, Vec3::Zero());
  pose[0] = Vec3(0, 0, 0);
  pose[5] = Vec3(8.5, -2.5, 0);
  pose[9] = Vec3(8.8, 0, 0);
  pose[17] = Vec3(7.6, 4.4, 0);
  return pose;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("pck counts strict hits") {
  std::vector<MatchedKeypoint> s;
  s.push_back(sample({100, 100}, {0.5, 0}, 1.0, 0));
  s.push_back(sample({100, 100}, {3.0, 4.0}, 1.0, 0));  // distance exactly 5
  CHECK(pck(s, 6.0) == 1.0);
  CHECK(pck(s, 5.0) == 0.5);  // boundary sample is not a hit
  CHECK(pck(s, 0.4) == 0.0);

  // The scale divides the threshold per sample.
  std::vector<MatchedKeypoint> scaled;
  scaled.push_back(sample({0, 0}, {10, 0}, 100.0, 0));
  CHECK(pck(scaled, 0.2) == 1.0);
  CHECK(pck(scaled, 0.05) == 0.0);

  CHECK_THROWS_AS(pck({}, 1.0), EmptyTestSet);
  CHECK_THROWS_AS(pck(s, 0.0), DomainError);
  CHECK_THROWS_AS(pck(s, -1.0), DomainError);
  s[0].scale = 0.0;
  CHECK_THROWS_AS(pck(s, 1.0), DomainError);
}

TEST_CASE("measured detector pck matches the configured rate") {
  DetectorModel model;
  model.pck.assign(HandSkeleton::keypoint_count, 0.7);
  std::vector<Vec2> truth;
  for (int k = 0; k < HandSkeleton::keypoint_count; ++k)
    truth.push_back(Vec2(150.0 + 73.0 * k, 120.0 + 41.0 * k));

  std::vector<MatchedKeypoint> samples;
  for (int frame = 0; frame < 5000; ++frame) {
    const auto dets = detect(model, 0, truth, frame);
    for (const auto& d : dets) {
      MatchedKeypoint s;
      s.truth = truth[d.keypoint];
      s.prediction = d.location;
      s.scale = model.sigma_pck;
      s.keypoint = d.keypoint;
      samples.push_back(s);
    }
  }
  const double measured = pck(samples, 1.0);
  CHECK(measured == doctest::Approx(0.7).epsilon(0.015));
}

TEST_CASE("pck curves split by joint class") {
  std::vector<MatchedKeypoint> s;
  s.push_back(sample({50, 50}, {0.5, 0}, 1.0, 0));   // wrist, hit from sigma 1
  s.push_back(sample({50, 50}, {1.5, 0}, 1.0, 0));   // wrist, hit from sigma 2
  s.push_back(sample({80, 40}, {0.3, 0}, 1.0, 5));   // mcp
  s.push_back(sample({80, 40}, {0.0, 0.4}, 1.0, 5)); // mcp
  const std::vector<double> thresholds = {1.0, 2.0};
  const auto curve = pck_curves(s, thresholds);

  CHECK(curve.thresholds == thresholds);
  REQUIRE(curve.overall.size() == 2);
  CHECK(curve.overall[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(curve.overall[1] == 1.0);
  CHECK(curve.class_counts[0] == 2);  // wrist
  CHECK(curve.class_counts[1] == 2);  // mcp
  CHECK(curve.class_counts[2] == 0);
  CHECK(curve.by_class[0][0] == 0.5);
  CHECK(curve.by_class[0][1] == 1.0);
  CHECK(curve.by_class[1][0] == 1.0);
  CHECK(curve.by_class[2][0] == 0.0);  // empty class column stays zero

  const std::string csv = pck_curve_csv(curve);
  CHECK(csv ==
        "sigma,overall,wrist,mcp,pip,dip,tip\n"
        "1,0.75,0.5,1,,,\n"
        "2,1,1,1,,,\n");

  CHECK_THROWS_AS(pck_curves({}, thresholds), EmptyTestSet);
  CHECK_THROWS_AS(pck_curves(s, {}), DomainError);
  s[0].keypoint = 21;
  CHECK_THROWS_AS(pck_curves(s, thresholds), DomainError);
}

TEST_CASE("pck curves from the detector are monotone across classes") {
  DetectorModel model;
  model.pck.assign(HandSkeleton::keypoint_count, 0.6);
  std::vector<Vec2> truth;
  for (int k = 0; k < HandSkeleton::keypoint_count; ++k)
    truth.push_back(Vec2(200.0 + 60.0 * k, 300.0 + 30.0 * k));
  std::vector<MatchedKeypoint> samples;
  for (int frame = 0; frame < 400; ++frame)
    for (const auto& d : detect(model, 3, truth, frame)) {
      MatchedKeypoint s;
      s.truth = truth[d.keypoint];
      s.prediction = d.location;
      s.scale = model.sigma_pck;
      s.keypoint = d.keypoint;
      samples.push_back(s);
    }
  const std::vector<double> thresholds = {0.1, 0.25, 0.5, 1.0, 2.0};
  const auto curve = pck_curves(samples, thresholds);
  CHECK_NOTHROW(curve.validate());
  for (long c : curve.class_counts) CHECK(c > 0);
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    CHECK(curve.overall[i] >= curve.overall[i - 1]);
    for (const auto& col : curve.by_class) CHECK(col[i] >= col[i - 1]);
  }
}

TEST_CASE("pck curve validation rejects malformed curves") {
  PckCurve curve;
  curve.thresholds = {1.0, 2.0};
  curve.overall = {0.8, 0.5};
  for (auto& col : curve.by_class) col = {0.0, 0.0};
  CHECK_THROWS_AS(curve.validate(), InvariantError);  // overall decreasing
  curve.overall = {0.5, 0.8};
  CHECK_NOTHROW(curve.validate());
  curve.overall = {0.5, 1.2};
  CHECK_THROWS_AS(curve.validate(), InvariantError);
  curve.overall = {0.5};
  CHECK_THROWS_AS(curve.validate(), InvariantError);  // ragged
}

TEST_CASE("hand frame is right-handed and orthonormal") {
  const auto pose = palm_pose();
  const HandFrame frame = hand_local_frame(pose);
  CHECK(frame.origin == Vec3(0, 0, 0));
  const Mat3 gram = frame.axes * frame.axes.transpose();
  CHECK((gram - Mat3::Identity()).norm() <= 1e-12);
  CHECK(frame.axes.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  // x points at the middle knuckle, z along the palm normal.
  CHECK((frame.axes.row(0).transpose() - Vec3(1, 0, 0)).norm() <= 1e-12);
  CHECK((frame.axes.row(2).transpose() - Vec3(0, 0, 1)).norm() <= 1e-12);

  SUBCASE("degenerate palms throw") {
    auto collinear = pose;
    collinear[5] = Vec3(1, 0, 0);
    collinear[9] = Vec3(2, 0, 0);
    collinear[17] = Vec3(3, 0, 0);
    CHECK_THROWS_AS(hand_local_frame(collinear), DomainError);
    auto coincident = pose;
    coincident[9] = coincident[0];
    CHECK_THROWS_AS(hand_local_frame(coincident), DomainError);
    CHECK_THROWS_AS(hand_local_frame(std::vector<Vec3>(5, Vec3::Zero())), DomainError);
  }
}

TEST_CASE("view angles in the canonical frame") {
  const auto pose = palm_pose();
  const HandFrame frame = hand_local_frame(pose);

  auto angles = view_angles(frame, Vec3(100, 0, 0));
  CHECK(angles.first == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(angles.second == doctest::Approx(0.0).epsilon(1e-9));

  angles = view_angles(frame, Vec3(0, 100, 0));
  CHECK(angles.first == doctest::Approx(90.0).epsilon(1e-9));

  angles = view_angles(frame, Vec3(-100, 0, 0));
  CHECK(angles.first == doctest::Approx(-180.0).epsilon(1e-9));  // +180 wraps

  angles = view_angles(frame, Vec3(0, 0, 100));
  CHECK(angles.second == doctest::Approx(90.0).epsilon(1e-9));

  CHECK_THROWS_AS(view_angles(frame, frame.origin), DomainError);
}

TEST_CASE("view angles are invariant under rigid motion") {
  Rng rng(909);
  for (int trial = 0; trial < 25; ++trial) {
    auto pose = palm_pose();
    for (int k = 0; k < HandSkeleton::keypoint_count; ++k)
      if (k != 0 && k != 5 && k != 9 && k != 17) pose[k] = random_point_in_cube(rng, 10.0);
    const Vec3 center = random_point_in_cube(rng, 150.0) + Vec3(0, 0, 60.0);
    const auto base = view_angles(hand_local_frame(pose), center);

    const Mat3 R = random_rotation(rng);
    const Vec3 t = random_point_in_cube(rng, 50.0);
    auto moved = pose;
    for (auto& p : moved) p = R * p + t;
    const auto rotated = view_angles(hand_local_frame(moved), R * center + t);
    CHECK(rotated.first == doctest::Approx(base.first).epsilon(1e-9));
    CHECK(rotated.second == doctest::Approx(base.second).epsilon(1e-9));
  }
}

TEST_CASE("heatmap grid and aggregation") {
  SUBCASE("empty input yields the full empty grid") {
    const auto bins = view_angle_heatmap({}, 20.0);
    REQUIRE(bins.size() == 18 * 9);
    CHECK(bins.front().phi_lo == -180.0);
    CHECK(bins.front().theta_lo == -90.0);
    CHECK(bins.back().phi_hi == 180.0);
    CHECK(bins.back().theta_hi == 90.0);
    // Row-major, azimuth fastest.
    CHECK(bins[1].phi_lo == -160.0);
    CHECK(bins[1].theta_lo == -90.0);
    CHECK(bins[18].phi_lo == -180.0);
    CHECK(bins[18].theta_lo == -70.0);
    for (const auto& b : bins) {
      CHECK(b.total == 0);
      CHECK(b.fraction() == 0.0);
    }
  }

  SUBCASE("all-inlier samples give zero fractions") {
    std::vector<ViewAngleSample> samples;
    for (int i = 0; i < 40; ++i) samples.push_back({-170.0 + 8.0 * i, 10.0, 0, 21});
    for (const auto& b : view_angle_heatmap(samples, 20.0)) CHECK(b.fraction() == 0.0);
  }

  SUBCASE("edge angles fold into the grid") {
    std::vector<ViewAngleSample> samples;
    samples.push_back({180.0, 0.0, 1, 2});   // wraps to -180
    samples.push_back({-180.0, 0.0, 1, 2});
    samples.push_back({0.0, 90.0, 0, 5});    // clamps to the top row
    samples.push_back({0.0, -90.0, 0, 5});
    const auto bins = view_angle_heatmap(samples, 20.0);
    long total = 0;
    for (const auto& b : bins) total += b.total;
    CHECK(total == 14);
    CHECK(bins[4 * 18 + 0].total == 4);  // phi [-180,-160), theta [-10,10)
    CHECK(bins[4 * 18 + 0].outliers == 2);
    CHECK(bins[8 * 18 + 9].total == 5);  // theta 90 joins [70,90]
    CHECK(bins[0 * 18 + 9].total == 5);
  }

  SUBCASE("random samples match an independent tally") {
    Rng rng(2024);
    std::vector<ViewAngleSample> samples;
    for (int i = 0; i < 500; ++i) {
      ViewAngleSample s;
      s.phi_deg = rng.uniform(-180.0, 180.0);
      s.theta_deg = rng.uniform(-90.0, 90.0);
      s.total = 1 + static_cast<long>(rng.below(20));
      s.outliers = static_cast<long>(rng.below(s.total + 1));
      samples.push_back(s);
    }
    const auto bins = view_angle_heatmap(samples, 30.0);
    REQUIRE(bins.size() == 12 * 6);
    std::map<std::pair<int, int>, std::pair<long, long>> tally;
    for (const auto& s : samples) {
      const int pi = std::min(11, static_cast<int>((s.phi_deg + 180.0) / 30.0));
      const int ti = std::min(5, static_cast<int>((s.theta_deg + 90.0) / 30.0));
      tally[{ti, pi}].first += s.outliers;
      tally[{ti, pi}].second += s.total;
    }
    for (int ti = 0; ti < 6; ++ti)
      for (int pi = 0; pi < 12; ++pi) {
        const auto& b = bins[ti * 12 + pi];
        const auto it = tally.find({ti, pi});
        CHECK(b.outliers == (it == tally.end() ? 0 : it->second.first));
        CHECK(b.total == (it == tally.end() ? 0 : it->second.second));
      }
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(view_angle_heatmap({}, 0.0), DomainError);
    CHECK_THROWS_AS(view_angle_heatmap({}, 25.0), DomainError);  // does not divide 360 and 180
    std::vector<ViewAngleSample> bad = {{0.0, 100.0, 0, 1}};
    CHECK_THROWS_AS(view_angle_heatmap(bad, 20.0), DomainError);
    bad = {{0.0, 0.0, 5, 2}};
    CHECK_THROWS_AS(view_angle_heatmap(bad, 20.0), DomainError);
  }
}

TEST_CASE("heatmap csv") {
  std::vector<ViewAngleSample> samples = {{-170.0, -80.0, 1, 4}};
  const auto bins = view_angle_heatmap(samples, 90.0);
  REQUIRE(bins.size() == 4 * 2);
  const std::string csv = heatmap_csv(bins);
  CHECK(csv.substr(0, csv.find('\n')) == "phi_lo,phi_hi,theta_lo,theta_hi,outliers,total,fraction");
  CHECK(csv.find("-180,-90,-90,0,1,4,0.25\n") != std::string::npos);
  // 7 columns on every line, 8 data rows plus the header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("view angle samples from records and detections") {
  SceneConfig scfg;
  scfg.views = 6;
  scfg.frames = 10;
  const SyntheticScene scene(scfg);
  const auto& rig = scene.rig();

  FrameRecord rec;
  rec.frame = 4;
  const auto truth = scene.truth3d(4);
  for (int k = 0; k < HandSkeleton::keypoint_count; ++k) {
    TriangulatedKeypoint tk;
    tk.keypoint = k;
    tk.position = truth[k];
    tk.inliers = {0, 1, 2, 3};  // views 4 and 5 never support anything
    tk.inlier_confidences = {1, 1, 1, 1};
    PointResult r;
    r.outcome = TriangulationOutcome::ok;
    r.point = std::move(tk);
    rec.keypoints.push_back(std::move(r));
  }
  rec.keypoints[7].outcome = TriangulationOutcome::no_consensus;
  rec.keypoints[7].point.reset();

  FrameDetections dets;
  dets.frame = 4;
  for (int k = 0; k < 21; ++k) dets.detections.push_back(det(0, k, Vec2(1, 1), 0.9));
  for (int k = 0; k < 5; ++k) dets.detections.push_back(det(4, k, Vec2(2, 2), 0.9));
  dets.detections.push_back(det(5, 7, Vec2(3, 3), 0.9));  // keypoint 7 failed: ignored

  std::vector<FrameRecord> records;
  records.push_back(std::move(rec));
  std::vector<FrameDetections> all_dets;
  all_dets.push_back(std::move(dets));

  const auto samples = collect_view_angle_samples(records, all_dets, rig);
  REQUIRE(samples.size() == 2);  // views 0 and 4; view 5 saw only the failed keypoint

  std::vector<Vec3> pose(HandSkeleton::keypoint_count, Vec3::Zero());
  for (int k = 0; k < 21; ++k)
    if (records[0].keypoints[k].ok()) pose[k] = records[0].keypoints[k].point->position;
  const HandFrame frame = hand_local_frame(pose);

  const auto& inlier_view = samples[0];
  CHECK(inlier_view.total == 20);  // 21 detections minus the failed keypoint
  CHECK(inlier_view.outliers == 0);
  const auto expect0 = view_angles(frame, rig.by_id(0).center());
  CHECK(inlier_view.phi_deg == doctest::Approx(expect0.first).epsilon(1e-12));
  CHECK(inlier_view.theta_deg == doctest::Approx(expect0.second).epsilon(1e-12));

  const auto& outlier_view = samples[1];
  CHECK(outlier_view.total == 5);
  CHECK(outlier_view.outliers == 5);

  SUBCASE("frames without a palm frame or without detections are skipped") {
    records[0].keypoints[0].outcome = TriangulationOutcome::no_consensus;
    records[0].keypoints[0].point.reset();
    CHECK(collect_view_angle_samples(records, all_dets, rig).empty());

    records[0].keypoints[0].outcome = TriangulationOutcome::ok;
    all_dets[0].frame = 99;
    CHECK(collect_view_angle_samples(records, all_dets, rig).empty());
  }
}

TEST_CASE("hand box from body keypoints") {
  const auto box = hand_bbox_from_body(Vec2(10, 0), Vec2(0, 0), 100.0);
  CHECK((box.center - Vec2(11.5, 0)).norm() <= 1e-12);
  CHECK(box.side == doctest::Approx(154.0).epsilon(1e-12));

  SUBCASE("side depends only on the head length") {
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
      const double angle = rng.uniform(0.0, 6.28);
      const Eigen::Rotation2Dd rot(angle);
      const Vec2 wrist = rot * Vec2(10, 0);
      const Vec2 elbow = rot * Vec2(0, 0);
      const auto b = hand_bbox_from_body(wrist, elbow, 100.0);
      CHECK(b.side == doctest::Approx(154.0).epsilon(1e-12));
      CHECK(b.center.norm() == doctest::Approx(11.5).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS(hand_bbox_from_body(Vec2(5, 5), Vec2(5, 5), 100.0), DegenerateArm);
  CHECK_THROWS_AS(hand_bbox_from_body(Vec2(10, 0), Vec2(0, 0), 0.0), DomainError);
  CHECK_THROWS_AS(hand_bbox_from_body(Vec2(10, 0), Vec2(0, 0), -3.0), DomainError);
}

}  // TEST_SUITE
