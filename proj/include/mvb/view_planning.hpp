#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvb/calibration.hpp"

namespace mvb {

/// A candidate capture setup: V views, inlier quorum n, RANSAC threshold
/// sigma (px), square image side w (px), detector correctness pck, and P
/// keypoints per frame.
struct SetupSpec {
  int views = 5;
  int min_inliers = 3;
  double sigma = 4.0;
  double image_side = 368.0;
  double pck = 0.6;
  int keypoints = 21;

  void validate() const;
};

/// Closed-form rates for one setup.
struct PlanningReport {
  double q2 = 0.0;        // spurious two-view agreement probability
  double p_rest = 0.0;    // P(enough extra views support a spurious pair)
  double qn = 0.0;        // q2 * p_rest
  double ft = 0.0;        // P(any spurious n-consensus among all pairs)
  double tp_point = 0.0;  // P(a point truly triangulates with >= n inliers)
  double fp_point = 0.0;
  double tp_frame = 0.0;  // all P keypoints correct
  double fp_frame = 0.0;  // >= 1 keypoint spurious, rest correct
  double fdr = 0.0;       // fp / (tp + fp), 0 when both vanish
};

/// Upper tail P(X >= k) for X ~ Binomial(N, p), accumulated in log space so
/// deep tails keep relative accuracy. k may range over [0, N+1]; k = 0 gives
/// 1 and k = N+1 gives 0. Throws DomainError outside these ranges.
double binom_tail(int N, double p, int k);

/// Probability that two uniformly random detections in a rectified pair admit
/// a consistent 3D point within sigma: 2*sigma/w.
double spurious_pair_prob(const SetupSpec& spec);

/// Probability that at least n-2 of the remaining V-2 views support a
/// spurious pair, each independently within the pi*sigma^2/w^2 bound.
double spurious_support_prob(const SetupSpec& spec);

/// Probability that any of the C(V,2) view pairs seeds a spurious consensus
/// of at least n views.
double false_triangulation_prob(const SetupSpec& spec);

struct PointRates {
  double tp = 0.0;
  double fp = 0.0;
};

/// tp = P(Binomial(V, pck) >= n); fp = (1 - tp) * false_triangulation_prob.
PointRates point_rates(const SetupSpec& spec);

struct FrameRates {
  double tp = 0.0;
  double fp = 0.0;
  double fdr = 0.0;
};

/// Frame-level rates over P keypoints: tp = tp_point^P and fp sums the ways
/// k >= 1 keypoints come up spurious while the rest are correct.
FrameRates frame_rates(const SetupSpec& spec);

PlanningReport plan_report(const SetupSpec& spec);

/// Reports for a list of setups, e.g. a pck sweep at fixed geometry.
std::vector<PlanningReport> plan_grid(std::span<const SetupSpec> specs);

/// Sweep used by the CLI presets: pck in {0.05..0.95 step 0.05}, n from 3 (the
/// pipeline's validity minimum) up to min(views, 8), sigma 4, w 368, P 21.
std::vector<SetupSpec> preset_grid(int views);

/// CSV with header V,n,sigma,w,pck,P,q2,qn,ft,tp_point,fp_point,tp,fp,fdr.
std::string plan_csv(std::span<const SetupSpec> specs, std::span<const PlanningReport> reports);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long trials = 0;
  long hits = 0;
};

/// Geometric oracle for q2: uniform detections in a rectified camera pair,
/// accepted when a triangulated point with positive depth reprojects within
/// sigma in both views.
McEstimate mc_spurious_pair_prob(const SetupSpec& spec, long trials, std::uint64_t seed,
                                 int jobs = 0);

/// Geometric oracle for ft: uniform detections in every view of a calibrated
/// ring, accepted when RANSAC reaches an n-view consensus.
McEstimate mc_false_triangulation_prob(const SetupSpec& spec, long trials, std::uint64_t seed,
                                       int jobs = 0);

struct McPointRates {
  McEstimate tp;
  McEstimate fp;
};

/// Closed-loop oracle for the point rates: a true point observed by a
/// synthetic detector at the spec's pck, triangulated by RANSAC; a consensus
/// near the truth counts toward tp, elsewhere toward fp.
McPointRates mc_point_rates(const SetupSpec& spec, long trials, std::uint64_t seed,
                            int jobs = 0);

/// Ring geometry shared by the Monte Carlo oracles: radius and focal length
/// chosen so the working volume projects inside the w-by-w image.
CameraRig planning_rig(const SetupSpec& spec);

}  // namespace mvb
