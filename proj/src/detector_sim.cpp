#include "mvb/detector_sim.hpp"

#include <cmath>
#include <numeric>

#include "mvb/error.hpp"
#include "mvb/rng.hpp"

namespace mvb {

void DetectorModel::validate() const {
  if (pck.empty()) throw InvariantError("detector: pck vector is empty");
  for (double p : pck)
    if (p < 0.0 || p > 1.0) throw InvariantError("detector: pck outside [0, 1]");
  if (!(sigma_pck > 0.0)) throw InvariantError("detector: sigma_pck must be positive");
  if (correct_noise_sigma < 0.0) throw InvariantError("detector: negative noise sigma");
  // P(|N(0, s^2 I2)| <= r) = 1 - exp(-r^2 / (2 s^2)) >= 0.99 requires
  // s <= r / sqrt(2 ln 100).
  const double s_max = sigma_pck / std::sqrt(2.0 * std::log(100.0));
  if (correct_noise_sigma > s_max)
    throw InvariantError("detector: correct_noise_sigma too large for sigma_pck (>1% leak)");
  if (confidence_correct_lo < 0.0 || confidence_correct_hi > 1.0 ||
      confidence_correct_lo > confidence_correct_hi || confidence_wrong_lo < 0.0 ||
      confidence_wrong_hi > 1.0 || confidence_wrong_lo > confidence_wrong_hi)
    throw InvariantError("detector: confidence ranges must be ordered within [0, 1]");
  if (image_width <= 0 || image_height <= 0) throw InvariantError("detector: empty image");
}

double DetectorQualityState::mean_pck() const {
  if (pck_per_keypoint.empty()) throw InvariantError("detector state: no keypoints");
  return std::accumulate(pck_per_keypoint.begin(), pck_per_keypoint.end(), 0.0) /
         static_cast<double>(pck_per_keypoint.size());
}

std::vector<Detection2D> detect(const DetectorModel& model, int view,
                                std::span<const Vec2> truth, int frame,
                                std::span<const std::uint8_t> visible) {
  model.validate();
  if (truth.size() != model.pck.size())
    throw DomainError("detect: truth size does not match pck vector");
  if (!visible.empty() && visible.size() != truth.size())
    throw DomainError("detect: visibility mask size mismatch");

  std::vector<Detection2D> out;
  out.reserve(truth.size());
  for (int kp = 0; kp < static_cast<int>(truth.size()); ++kp) {
    Rng rng(seed_mix({model.rng_seed, static_cast<std::uint64_t>(frame),
                      static_cast<std::uint64_t>(view), static_cast<std::uint64_t>(kp)}));
    const bool can_see = visible.empty() || visible[kp] != 0;
    const bool correct = can_see && rng.unit() < model.pck[kp];

    Detection2D det;
    det.view = view;
    det.keypoint = kp;
    if (correct) {
      const auto [gx, gy] = rng.gaussian_pair();
      det.location = truth[kp] + model.correct_noise_sigma * Vec2(gx, gy);
      det.confidence = rng.uniform(model.confidence_correct_lo, model.confidence_correct_hi);
    } else {
      det.location.x() = rng.uniform(0.0, static_cast<double>(model.image_width));
      det.location.y() = rng.uniform(0.0, static_cast<double>(model.image_height));
      det.confidence = rng.uniform(model.confidence_wrong_lo, model.confidence_wrong_hi);
    }
    out.push_back(det);
  }
  return out;
}

QualityUpdateRule make_saturating_rule(double kappa) {
  if (!(kappa > 0.0)) throw DomainError("trainer: kappa must be positive");
  return [kappa](double pck, long new_labels) {
    return 1.0 - (1.0 - pck) * std::exp(-static_cast<double>(new_labels) / kappa);
  };
}

void trainer_update(DetectorQualityState& state, long new_labels, const QualityUpdateRule& rule) {
  if (new_labels < 0) throw DomainError("trainer: negative label count");
  if (!rule) throw DomainError("trainer: empty update rule");
  for (double& p : state.pck_per_keypoint) {
    const double next = rule(p, new_labels);
    if (next < 0.0 || next > 1.0)
      throw InvariantError("trainer: update rule left [0, 1]");
    p = next;
  }
  state.training_set_size += new_labels;
}

}  // namespace mvb
