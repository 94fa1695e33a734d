#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mvb/detections.hpp"
#include "mvb/geometry.hpp"

namespace mvb {

/// Synthetic keypoint detector with a tunable per-keypoint correctness rate.
/// A correct detection is the true location plus isotropic Gaussian jitter
/// and a high confidence; a failed detection is uniform over the image with a
/// low-to-middling confidence. Draws are a pure function of
/// (seed, frame, view, keypoint).
struct DetectorModel {
  std::vector<double> pck;          // per-keypoint probability of a correct hit
  double sigma_pck = 10.0;          // pixel radius defining "correct"
  double correct_noise_sigma = 2.0; // jitter sigma of correct detections
  double confidence_correct_lo = 0.5;
  double confidence_correct_hi = 1.0;
  double confidence_wrong_lo = 0.0;
  double confidence_wrong_hi = 0.6;
  int image_width = 1920;
  int image_height = 1080;
  std::uint64_t rng_seed = 1;

  /// Checks ranges and that the jitter keeps at least 99% of correct
  /// detections within sigma_pck (Rayleigh tail bound).
  void validate() const;
};

/// Detector quality tracked across bootstrap iterations.
struct DetectorQualityState {
  std::vector<double> pck_per_keypoint;
  long training_set_size = 0;

  double mean_pck() const;
};

/// Runs the detector on one view of one frame. `truth` holds the ground-truth
/// pixel of each keypoint; `visible`, when non-empty, marks keypoints the
/// detector can see at all (non-zero byte) -- hidden keypoints always take
/// the failure branch. Returns one detection per keypoint.
std::vector<Detection2D> detect(const DetectorModel& model, int view,
                                std::span<const Vec2> truth, int frame,
                                std::span<const std::uint8_t> visible = {});

/// Maps (current pck, number of new training labels) to the updated pck.
/// Must be monotone nondecreasing in the label count.
using QualityUpdateRule = std::function<double(double pck, long new_labels)>;

/// Saturating default rule: pck' = 1 - (1 - pck) * exp(-new_labels / kappa).
QualityUpdateRule make_saturating_rule(double kappa);

/// Applies the rule to every keypoint and grows the training-set counter.
void trainer_update(DetectorQualityState& state, long new_labels, const QualityUpdateRule& rule);

}  // namespace mvb
