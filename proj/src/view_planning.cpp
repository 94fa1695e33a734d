#include "mvb/view_planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "mvb/detections.hpp"
#include "mvb/format.hpp"
#include "mvb/parallel.hpp"
#include "mvb/ransac.hpp"
#include "mvb/rng.hpp"
#include "mvb/scene.hpp"

namespace mvb {

void SetupSpec::validate() const {
  if (views < 2) throw DomainError("setup: views must be >= 2");
  if (min_inliers < 2 || min_inliers > views)
    throw DomainError("setup: min_inliers must lie in [2, views]");
  if (!(sigma >= 0.0)) throw DomainError("setup: sigma must be nonnegative");
  if (!(image_side > 0.0) || sigma >= image_side)
    throw DomainError("setup: image side must exceed sigma");
  if (pck < 0.0 || pck > 1.0) throw DomainError("setup: pck outside [0, 1]");
  if (keypoints < 1) throw DomainError("setup: keypoints must be >= 1");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(const std::vector<double>& logs) {
  const double m = *std::max_element(logs.begin(), logs.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double l : logs) s += std::exp(l - m);
  return m + std::log(s);
}

// base^e in log space with 0^0 = 1.
double log_pow(double base, int e) {
  if (e == 0) return 0.0;
  if (base <= 0.0) return kNegInf;
  return e * std::log(base);
}

// log of sum_{l in [lo, hi]} P(X = l) for X ~ B(N, p), p in (0, 1).
double log_binom_range(int N, double lp, double lq, int lo, int hi) {
  std::vector<double> logs;
  logs.reserve(hi - lo + 1);
  for (int l = lo; l <= hi; ++l) logs.push_back(log_choose(N, l) + l * lp + (N - l) * lq);
  return log_sum_exp(logs);
}

// P(X < k): the complement of binom_tail, evaluated through whichever tail is
// smaller so the result keeps relative accuracy when it is tiny. Computing it
// as 1 - binom_tail would cancel to rounding noise once the upper tail
// saturates.
double binom_lower(int N, double p, int k) {
  if (k <= 0) return 0.0;
  if (k == N + 1) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double log_lower = log_binom_range(N, lp, lq, 0, k - 1);
  if (log_lower <= std::log(0.5)) return std::exp(log_lower);
  return 1.0 - std::min(1.0, std::exp(log_binom_range(N, lp, lq, k, N)));
}

}  // namespace

double binom_tail(int N, double p, int k) {
  if (N < 0) throw DomainError("binom_tail: negative N");
  if (!(p >= 0.0) || !(p <= 1.0)) throw DomainError("binom_tail: p outside [0, 1]");
  if (k < 0 || k > N + 1) throw DomainError("binom_tail: k outside [0, N+1]");
  if (k == 0) return 1.0;
  if (k == N + 1) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double log_upper = log_binom_range(N, lp, lq, k, N);
  if (log_upper <= std::log(0.5)) return std::min(1.0, std::exp(log_upper));
  // Dominant upper tail: evaluate its small complement instead, so values
  // near one saturate cleanly rather than wobbling in the last ulp.
  return 1.0 - std::min(1.0, std::exp(log_binom_range(N, lp, lq, 0, k - 1)));
}

double spurious_pair_prob(const SetupSpec& spec) {
  spec.validate();
  return 2.0 * spec.sigma / spec.image_side;
}

double spurious_support_prob(const SetupSpec& spec) {
  spec.validate();
  const double per_view =
      std::numbers::pi * spec.sigma * spec.sigma / (spec.image_side * spec.image_side);
  return binom_tail(spec.views - 2, per_view, spec.min_inliers - 2);
}

double false_triangulation_prob(const SetupSpec& spec) {
  spec.validate();
  const double qn = spurious_pair_prob(spec) * spurious_support_prob(spec);
  const double pairs = 0.5 * spec.views * (spec.views - 1);
  // 1 - (1 - qn)^pairs, stable for tiny qn.
  return -std::expm1(pairs * std::log1p(-qn));
}

PointRates point_rates(const SetupSpec& spec) {
  spec.validate();
  PointRates r;
  r.tp = binom_tail(spec.views, spec.pck, spec.min_inliers);
  // The miss probability comes from the lower tail directly: subtracting tp
  // from one would flatten it to zero once tp saturates.
  r.fp = binom_lower(spec.views, spec.pck, spec.min_inliers) * false_triangulation_prob(spec);
  return r;
}

FrameRates frame_rates(const SetupSpec& spec) {
  spec.validate();
  const PointRates pr = point_rates(spec);
  const int P = spec.keypoints;
  FrameRates fr;
  fr.tp = std::exp(log_pow(pr.tp, P));
  std::vector<double> logs;
  logs.reserve(P);
  for (int k = 1; k <= P; ++k)
    logs.push_back(log_choose(P, k) + log_pow(pr.tp, P - k) + log_pow(pr.fp, k));
  fr.fp = std::exp(log_sum_exp(logs));
  const double denom = fr.tp + fr.fp;
  fr.fdr = denom > 0.0 ? fr.fp / denom : 0.0;
  return fr;
}

PlanningReport plan_report(const SetupSpec& spec) {
  PlanningReport rep;
  rep.q2 = spurious_pair_prob(spec);
  rep.p_rest = spurious_support_prob(spec);
  rep.qn = rep.q2 * rep.p_rest;
  rep.ft = false_triangulation_prob(spec);
  const PointRates pr = point_rates(spec);
  rep.tp_point = pr.tp;
  rep.fp_point = pr.fp;
  const FrameRates fr = frame_rates(spec);
  rep.tp_frame = fr.tp;
  rep.fp_frame = fr.fp;
  rep.fdr = fr.fdr;
  return rep;
}

std::vector<PlanningReport> plan_grid(std::span<const SetupSpec> specs) {
  std::vector<PlanningReport> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(plan_report(s));
  return out;
}

// The grid starts at n = 3: the pipeline never accepts a point with fewer
// inliers, so lower quorums are not operating points worth tabulating.
std::vector<SetupSpec> preset_grid(int views) {
  std::vector<SetupSpec> out;
  const int n_max = std::min(views, 8);
  for (int n = 3; n <= n_max; ++n)
    for (int pc = 1; pc <= 19; ++pc) {
      SetupSpec s;
      s.views = views;
      s.min_inliers = n;
      s.pck = 0.05 * pc;
      out.push_back(s);
    }
  return out;
}

std::string plan_csv(std::span<const SetupSpec> specs, std::span<const PlanningReport> reports) {
  if (specs.size() != reports.size())
    throw DomainError("plan_csv: specs and reports differ in length");
  std::ostringstream out;
  out << "V,n,sigma,w,pck,P,q2,qn,ft,tp_point,fp_point,tp,fp,fdr\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const auto& r = reports[i];
    out << s.views << ',' << s.min_inliers << ',' << format_double(s.sigma) << ','
        << format_double(s.image_side) << ',' << format_double(s.pck) << ',' << s.keypoints
        << ',' << format_double(r.q2) << ',' << format_double(r.qn) << ','
        << format_double(r.ft) << ',' << format_double(r.tp_point) << ','
        << format_double(r.fp_point) << ',' << format_double(r.tp_frame) << ','
        << format_double(r.fp_frame) << ',' << format_double(r.fdr) << "\n";
  }
  return out.str();
}

namespace {

McEstimate finish(long hits, long trials) {
  McEstimate e;
  e.trials = trials;
  e.hits = hits;
  e.value = trials > 0 ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  e.std_error = trials > 0 ? std::sqrt(std::max(e.value * (1.0 - e.value), 0.0) /
                                       static_cast<double>(trials))
                           : 0.0;
  return e;
}

// Tallies per-trial successes in per-worker accumulators so the totals do not
// depend on the thread count.
template <typename TrialFn>
long run_trials(long trials, int jobs, TrialFn&& trial) {
  jobs = resolve_jobs(jobs);
  std::vector<long> counts(static_cast<std::size_t>(jobs), 0);
  const long chunk = (trials + jobs - 1) / jobs;
  parallel_chunks(jobs, jobs, [&](std::int64_t wb, std::int64_t we) {
    for (std::int64_t w = wb; w < we; ++w) {
      const long begin = static_cast<long>(w) * chunk;
      const long end = std::min(trials, begin + chunk);
      long local = 0;
      for (long t = begin; t < end; ++t) local += trial(t) ? 1 : 0;
      counts[static_cast<std::size_t>(w)] = local;
    }
  });
  long total = 0;
  for (long c : counts) total += c;
  return total;
}

}  // namespace

CameraRig planning_rig(const SetupSpec& spec) {
  spec.validate();
  const int side = static_cast<int>(std::lround(spec.image_side));
  const double focal = 2.2 * spec.image_side;
  return make_camera_ring(spec.views, 200.0, focal, side, side);
}

McEstimate mc_spurious_pair_prob(const SetupSpec& spec, long trials, std::uint64_t seed,
                                 int jobs) {
  spec.validate();
  if (trials < 1) throw DomainError("mc: trials must be >= 1");
  const double w = spec.image_side;
  const double focal = 2.2 * w;
  const double baseline = 30.0;

  std::vector<CameraView> cams(2);
  for (int i = 0; i < 2; ++i) {
    cams[i].id = i;
    cams[i].intrinsics << focal, 0.0, w / 2.0, 0.0, focal, w / 2.0, 0.0, 0.0, 1.0;
    cams[i].image_width = cams[i].image_height = static_cast<int>(std::lround(w));
    cams[i].translation = Vec3(i == 0 ? 0.0 : -baseline, 0.0, 0.0);
  }

  const long hits = run_trials(trials, jobs, [&](long t) {
    Rng rng(seed_mix({seed, static_cast<std::uint64_t>(t), 0xA2}));
    const std::vector<Vec2> px = {{rng.uniform(0.0, w), rng.uniform(0.0, w)},
                                  {rng.uniform(0.0, w), rng.uniform(0.0, w)}};
    Vec3 X;
    try {
      X = triangulate_linear<double>(cams, px);
    } catch (const DegenerateGeometry&) {
      return false;
    }
    if (!(X.z() > 0.0)) return false;  // behind the rectified pair
    const auto refined = refine_triangulation<double>(X, cams, px);
    return refined.residuals[0] <= spec.sigma && refined.residuals[1] <= spec.sigma;
  });
  return finish(hits, trials);
}

McEstimate mc_false_triangulation_prob(const SetupSpec& spec, long trials, std::uint64_t seed,
                                       int jobs) {
  spec.validate();
  if (trials < 1) throw DomainError("mc: trials must be >= 1");
  const CameraRig rig = planning_rig(spec);
  const double w = spec.image_side;

  RansacConfig cfg;
  cfg.confidence_threshold = 0.0;
  cfg.reproj_inlier_sigma = spec.sigma;
  cfg.min_inliers = spec.min_inliers;

  const long hits = run_trials(trials, jobs, [&](long t) {
    Rng rng(seed_mix({seed, static_cast<std::uint64_t>(t), 0xF7}));
    std::vector<Detection2D> dets(spec.views);
    for (int v = 0; v < spec.views; ++v) {
      dets[v].view = v;
      dets[v].keypoint = 0;
      dets[v].location = Vec2(rng.uniform(0.0, w), rng.uniform(0.0, w));
      dets[v].confidence = 1.0;
    }
    RansacConfig trial_cfg = cfg;
    trial_cfg.rng_seed = seed_mix({seed, static_cast<std::uint64_t>(t), 0x5E});
    return ransac_triangulate_point(dets, rig, trial_cfg).ok();
  });
  return finish(hits, trials);
}

McPointRates mc_point_rates(const SetupSpec& spec, long trials, std::uint64_t seed, int jobs) {
  spec.validate();
  if (trials < 1) throw DomainError("mc: trials must be >= 1");
  const CameraRig rig = planning_rig(spec);
  const double w = spec.image_side;
  // Jitter kept well inside the inlier gate so a correct detection is an
  // inlier with near certainty, matching the closed form's assumption.
  constexpr double kNoiseSigma = 0.5;
  constexpr double kTrueRadius = 10.0;  // cm: consensus closer than this is "true"

  jobs = resolve_jobs(jobs);
  std::vector<long> tp_counts(static_cast<std::size_t>(jobs), 0);
  std::vector<long> fp_counts(static_cast<std::size_t>(jobs), 0);
  const long chunk = (trials + jobs - 1) / jobs;
  parallel_chunks(jobs, jobs, [&](std::int64_t wb, std::int64_t we) {
    for (std::int64_t wk = wb; wk < we; ++wk) {
      const long begin = static_cast<long>(wk) * chunk;
      const long end = std::min(trials, begin + chunk);
      long tp_local = 0, fp_local = 0;
      for (long t = begin; t < end; ++t) {
        Rng rng(seed_mix({seed, static_cast<std::uint64_t>(t), 0x9C}));
        const Vec3 truth(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0),
                         rng.uniform(-20.0, 20.0));
        std::vector<Detection2D> dets(spec.views);
        for (int v = 0; v < spec.views; ++v) {
          dets[v].view = v;
          dets[v].keypoint = 0;
          const bool correct = rng.unit() < spec.pck;
          if (correct) {
            const auto [gx, gy] = rng.gaussian_pair();
            dets[v].location = project(rig.cameras[v], truth) + kNoiseSigma * Vec2(gx, gy);
            dets[v].confidence = rng.uniform(0.5, 1.0);
          } else {
            dets[v].location = Vec2(rng.uniform(0.0, w), rng.uniform(0.0, w));
            dets[v].confidence = rng.uniform(0.0, 0.6);
          }
        }
        RansacConfig cfg;
        cfg.reproj_inlier_sigma = spec.sigma;
        cfg.min_inliers = spec.min_inliers;
        cfg.rng_seed = seed_mix({seed, static_cast<std::uint64_t>(t), 0x3D});
        const auto result = ransac_triangulate_point(dets, rig, cfg);
        if (!result.ok()) continue;
        if ((result.point->position - truth).norm() <= kTrueRadius)
          ++tp_local;
        else
          ++fp_local;
      }
      tp_counts[static_cast<std::size_t>(wk)] = tp_local;
      fp_counts[static_cast<std::size_t>(wk)] = fp_local;
    }
  });
  long tp_total = 0, fp_total = 0;
  for (long c : tp_counts) tp_total += c;
  for (long c : fp_counts) fp_total += c;
  McPointRates out;
  out.tp = finish(tp_total, trials);
  out.fp = finish(fp_total, trials);
  return out;
}

}  // namespace mvb
