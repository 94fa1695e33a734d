#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvb/bootstrap.hpp"
#include "mvb/calibration.hpp"
#include "mvb/config.hpp"
#include "mvb/detections.hpp"
#include "mvb/format.hpp"
#include "mvb/io_jsonl.hpp"
#include "mvb/metrics.hpp"
#include "mvb/parallel.hpp"
#include "mvb/view_planning.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitNoConsensus = 4;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw mvb::ParseError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw mvb::ParseError("write failed on " + path);
}

std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ':')) parts.push_back(token);
  if (parts.size() == 1) return {mvb::parse_double(parts[0], what)};
  if (parts.size() != 3) throw mvb::ParseError(what + ": want a number or lo:step:hi");
  const double lo = mvb::parse_double(parts[0], what);
  const double step = mvb::parse_double(parts[1], what);
  const double hi = mvb::parse_double(parts[2], what);
  if (!(step > 0.0) || hi < lo) throw mvb::ParseError(what + ": want lo <= hi and step > 0");
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-12; v += step) {
    out.push_back(v);
    if (out.size() > 100000) throw mvb::ParseError(what + ": grid too large");
  }
  return out;
}

long parse_trials(const std::string& text) {
  const std::string prefix = "trials=";
  if (text.rfind(prefix, 0) != 0)
    throw mvb::ParseError("--verify-mc: want trials=<count>");
  const double v = mvb::parse_double(text.substr(prefix.size()), "--verify-mc trials");
  const long trials = std::lround(v);
  if (trials < 1 || static_cast<double>(trials) != v)
    throw mvb::ParseError("--verify-mc: trials must be a positive integer");
  return trials;
}

struct TriangulateArgs {
  std::string config_path;
  std::string calibration_path;
  std::string detections_path;
  std::string output_path;
  int jobs = 0;
};

int cmd_triangulate(const TriangulateArgs& args) {
  mvb::PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = mvb::load_pipeline_config(args.config_path);
  const std::string calib =
      !args.calibration_path.empty() ? args.calibration_path : cfg.calibration_path;
  const std::string dets_path =
      !args.detections_path.empty() ? args.detections_path : cfg.detections_path;
  if (calib.empty()) throw mvb::ParseError("triangulate: no calibration file given");
  if (dets_path.empty()) throw mvb::ParseError("triangulate: no detections file given");

  const mvb::CameraRig rig = mvb::load_calibration(calib);
  const auto frames = mvb::load_detections_csv(dets_path);
  const auto& skeleton = mvb::hand_skeleton();

  std::vector<mvb::FrameRecord> records(frames.size());
  mvb::parallel_chunks(static_cast<std::int64_t>(frames.size()), args.jobs,
                       [&](std::int64_t begin, std::int64_t end) {
                         for (std::int64_t i = begin; i < end; ++i) {
                           auto& rec = records[i];
                           rec.frame = frames[i].frame;
                           rec.keypoints =
                               mvb::triangulate_frame(frames[i], rig, skeleton, cfg.ransac);
                           rec.score = mvb::score_frame(rec);
                           rec.window = rec.frame / cfg.filter.window_size;
                         }
                       });

  std::ostringstream out;
  for (const auto& rec : records) out << mvb::triangulation_jsonl_line(rec) << '\n';
  write_text(args.output_path, out.str());

  bool any_ok = false;
  for (const auto& rec : records)
    for (const auto& r : rec.keypoints) any_ok = any_ok || r.ok();
  if (!frames.empty() && !any_ok) {
    std::cerr << "triangulate: no keypoint reached consensus in any frame\n";
    return kExitNoConsensus;
  }
  return 0;
}

struct BootstrapArgs {
  std::string config_path;
  int jobs = -1;  // -1 keeps the config value
};

int cmd_bootstrap(const BootstrapArgs& args) {
  const mvb::PipelineConfig cfg = mvb::load_pipeline_config(args.config_path);
  if (!cfg.has_scene)
    throw mvb::ParseError("bootstrap: config needs a [scene] section for the synthetic capture");

  const mvb::SyntheticScene scene(cfg.scene);
  mvb::DetectorQualityState state;
  state.pck_per_keypoint.assign(mvb::HandSkeleton::keypoint_count, cfg.initial_pck);

  mvb::BootstrapConfig run;
  run.ransac = cfg.ransac;
  run.filter = cfg.filter;
  run.detector = cfg.detector;
  run.trainer_kappa = cfg.trainer_kappa;
  run.iterations = cfg.iterations;
  run.jobs = args.jobs >= 0 ? args.jobs : cfg.jobs;
  const mvb::BootstrapResult result = mvb::run_bootstrap(scene, state, run);

  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  std::ostringstream report;
  report << "iteration,pck_before,frames_selected,labels_emitted,pck_after\n";
  for (const auto& row : result.report) {
    report << row.iteration << ',' << mvb::format_double(row.pck_before) << ','
           << row.frames_selected << ',' << row.labels_emitted << ','
           << mvb::format_double(row.pck_after) << '\n';
  }
  write_text((out_dir / "report.csv").string(), report.str());
  for (std::size_t i = 0; i < result.labels_per_iteration.size(); ++i) {
    const auto name = "labels_iter" + std::to_string(i + 1) + ".jsonl";
    mvb::save_labels_jsonl(out_dir / name, result.labels_per_iteration[i]);
  }
  std::cout << report.str();
  return 0;
}

struct PlanArgs {
  std::vector<int> views;
  std::vector<int> inliers;
  double sigma = 4.0;
  double width = 368.0;
  std::string pck_grid;
  int keypoints = 21;
  std::string output_path;
  std::string verify_mc;
  std::uint64_t seed = 1;
  int jobs = 0;
};

int cmd_plan(const PlanArgs& args) {
  std::vector<int> views = args.views;
  if (views.empty()) views = {5, 31};
  std::vector<double> pcks;
  if (!args.pck_grid.empty())
    pcks = parse_grid(args.pck_grid, "--pck");
  else
    for (int pc = 1; pc <= 19; ++pc) pcks.push_back(0.05 * pc);

  std::vector<mvb::SetupSpec> specs;
  for (int V : views) {
    if (V < 2) throw mvb::ParseError("plan: invalid grid: setup: views must be >= 2");
    std::vector<int> ns = args.inliers;
    if (ns.empty())
      for (int n = 3; n <= std::min(V, 8); ++n) ns.push_back(n);
    for (int n : ns)
      for (double pck : pcks) {
        mvb::SetupSpec s;
        s.views = V;
        s.min_inliers = n;
        s.sigma = args.sigma;
        s.image_side = args.width;
        s.pck = pck;
        s.keypoints = args.keypoints;
        try {
          s.validate();
        } catch (const mvb::Error& e) {
          throw mvb::ParseError(std::string("plan: invalid grid: ") + e.what());
        }
        specs.push_back(s);
      }
  }

  const auto reports = mvb::plan_grid(specs);
  if (args.verify_mc.empty()) {
    write_text(args.output_path, mvb::plan_csv(specs, reports));
    return 0;
  }

  const long trials = parse_trials(args.verify_mc);
  std::ostringstream out;
  out << "V,n,sigma,w,pck,P,q2,qn,ft,tp_point,fp_point,tp,fp,fdr"
      << ",mc_ft,mc_ft_se,mc_tp,mc_tp_se,mc_fp,mc_fp_se,agree_ft,agree_tp,agree_fp\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const auto& r = reports[i];
    const auto mc_ft = mvb::mc_false_triangulation_prob(s, trials, args.seed, args.jobs);
    const auto mc_pr = mvb::mc_point_rates(s, trials, args.seed, args.jobs);
    const bool agree_ft = mc_ft.value - r.ft <= 3.0 * mc_ft.std_error;
    const bool agree_tp = std::abs(mc_pr.tp.value - r.tp_point) <= 3.0 * mc_pr.tp.std_error;
    const bool agree_fp = mc_pr.fp.value - r.fp_point <= 3.0 * mc_pr.fp.std_error;
    out << s.views << ',' << s.min_inliers << ',' << mvb::format_double(s.sigma) << ','
        << mvb::format_double(s.image_side) << ',' << mvb::format_double(s.pck) << ','
        << s.keypoints << ',' << mvb::format_double(r.q2) << ',' << mvb::format_double(r.qn)
        << ',' << mvb::format_double(r.ft) << ',' << mvb::format_double(r.tp_point) << ','
        << mvb::format_double(r.fp_point) << ',' << mvb::format_double(r.tp_frame) << ','
        << mvb::format_double(r.fp_frame) << ',' << mvb::format_double(r.fdr) << ','
        << mvb::format_double(mc_ft.value) << ',' << mvb::format_double(mc_ft.std_error) << ','
        << mvb::format_double(mc_pr.tp.value) << ',' << mvb::format_double(mc_pr.tp.std_error)
        << ',' << mvb::format_double(mc_pr.fp.value) << ','
        << mvb::format_double(mc_pr.fp.std_error) << ',' << (agree_ft ? 1 : 0) << ','
        << (agree_tp ? 1 : 0) << ',' << (agree_fp ? 1 : 0) << '\n';
  }
  write_text(args.output_path, out.str());
  return 0;
}

struct EvalPckArgs {
  std::string detections_path;
  std::string truth_path;
  double scale = 10.0;
  std::string sigma_grid = "0.1:0.1:2.0";
  std::string output_path;
};

int cmd_eval_pck(const EvalPckArgs& args) {
  const auto detections = mvb::load_detections_csv(args.detections_path);
  const auto truth = mvb::load_labels_jsonl(args.truth_path);
  const auto sigmas = parse_grid(args.sigma_grid, "--sigmas");

  std::map<std::pair<int, int>, const mvb::LabeledTrainingExample*> truth_by_key;
  for (const auto& ex : truth) truth_by_key[{ex.frame, ex.view}] = &ex;

  std::vector<mvb::MatchedKeypoint> samples;
  for (const auto& frame : detections)
    for (const auto& det : frame.detections) {
      const auto it = truth_by_key.find({frame.frame, det.view});
      if (it == truth_by_key.end()) continue;
      const auto& ex = *it->second;
      if (ex.weights[det.keypoint] != 1) continue;
      mvb::MatchedKeypoint m;
      m.prediction = det.location;
      m.truth = *ex.labels[det.keypoint];
      m.scale = args.scale;
      m.keypoint = det.keypoint;
      samples.push_back(m);
    }

  const auto curve = mvb::pck_curves(samples, sigmas);
  write_text(args.output_path, mvb::pck_curve_csv(curve));
  return 0;
}

struct EvalHeatmapArgs {
  std::string calibration_path;
  std::string triangulation_path;
  std::string detections_path;
  double bin_deg = 20.0;
  std::string output_path;
};

int cmd_eval_heatmap(const EvalHeatmapArgs& args) {
  const mvb::CameraRig rig = mvb::load_calibration(args.calibration_path);
  const auto records = mvb::load_triangulation_jsonl(args.triangulation_path);
  const auto detections = mvb::load_detections_csv(args.detections_path);
  const auto samples = mvb::collect_view_angle_samples(records, detections, rig);
  const auto bins = mvb::view_angle_heatmap(samples, args.bin_deg);
  write_text(args.output_path, mvb::heatmap_csv(bins));
  return 0;
}

struct SynthArgs {
  std::string config_path;
  std::string out_calibration;
  std::string out_detections;
  std::string out_truth;
};

int cmd_synth(const SynthArgs& args) {
  const mvb::PipelineConfig cfg = mvb::load_pipeline_config(args.config_path);
  if (!cfg.has_scene) throw mvb::ParseError("synth: config needs a [scene] section");

  const mvb::SyntheticScene scene(cfg.scene);
  const auto& rig = scene.rig();
  if (!args.out_calibration.empty()) mvb::save_calibration(rig, args.out_calibration);

  mvb::DetectorModel model = cfg.detector;
  model.pck.assign(mvb::HandSkeleton::keypoint_count, cfg.initial_pck);
  model.image_width = cfg.scene.image_width;
  model.image_height = cfg.scene.image_height;

  std::vector<mvb::FrameDetections> frames;
  std::vector<mvb::LabeledTrainingExample> truth;
  for (int f = 0; f < scene.frame_count(); ++f) {
    mvb::FrameDetections fd;
    fd.frame = f;
    for (int v = 0; v < rig.size(); ++v) {
      const auto truth2d = scene.truth2d(f, v);
      const auto vis = scene.visibility(f, v);
      const auto dets = mvb::detect(model, rig.cameras[v].id, truth2d, f, vis);
      fd.detections.insert(fd.detections.end(), dets.begin(), dets.end());
      if (!args.out_truth.empty()) {
        mvb::LabeledTrainingExample ex;
        ex.frame = f;
        ex.view = rig.cameras[v].id;
        int labeled = 0;
        for (int p = 0; p < mvb::HandSkeleton::keypoint_count; ++p) {
          if (vis[p] == 0) continue;
          ex.labels[p] = truth2d[p];
          ex.weights[p] = 1;
          ++labeled;
        }
        if (labeled > 0) truth.push_back(ex);
      }
    }
    frames.push_back(std::move(fd));
  }
  if (!args.out_detections.empty()) mvb::save_detections_csv(frames, args.out_detections);
  if (!args.out_truth.empty()) mvb::save_labels_jsonl(args.out_truth, truth);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Multiview bootstrapping of hand keypoint detectors"};
  app.require_subcommand(0, 1);
  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults, "Print the default config file and exit");

  TriangulateArgs tri;
  auto* tri_cmd = app.add_subcommand("triangulate", "RANSAC-triangulate detections per frame");
  tri_cmd->add_option("--config", tri.config_path, "Pipeline config file");
  tri_cmd->add_option("--calibration", tri.calibration_path, "Camera calibration JSON");
  tri_cmd->add_option("--detections", tri.detections_path, "Detections CSV");
  tri_cmd->add_option("--output", tri.output_path, "Output JSONL ('-' = stdout)");
  tri_cmd->add_option("--jobs", tri.jobs, "Worker threads (0 = all cores)");

  BootstrapArgs boot;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Run the full bootstrapping loop");
  boot_cmd->add_option("--config", boot.config_path, "Pipeline config file")->required();
  boot_cmd->add_option("--jobs", boot.jobs, "Worker threads (0 = all cores)");

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Closed-form capture planning table");
  plan_cmd->add_option("--views", plan.views, "Camera count (repeatable; default 5 and 31)");
  plan_cmd->add_option("--inliers", plan.inliers,
                       "Consensus size n (repeatable; default 3..min(V,8))");
  plan_cmd->add_option("--sigma", plan.sigma, "Inlier threshold, px");
  plan_cmd->add_option("--width", plan.width, "Square image side, px");
  plan_cmd->add_option("--pck", plan.pck_grid, "Detector PCK: number or lo:step:hi");
  plan_cmd->add_option("--keypoints", plan.keypoints, "Keypoints per frame");
  plan_cmd->add_option("--output", plan.output_path, "Output CSV ('-' = stdout)");
  plan_cmd->add_option("--verify-mc", plan.verify_mc,
                       "trials=<count>: append Monte Carlo columns and agreement flags");
  plan_cmd->add_option("--seed", plan.seed, "Monte Carlo seed");
  plan_cmd->add_option("--jobs", plan.jobs, "Worker threads (0 = all cores)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate detections against ground truth");
  eval_cmd->require_subcommand(1);
  EvalPckArgs epck;
  auto* epck_cmd = eval_cmd->add_subcommand("pck", "PCK curves by joint class");
  epck_cmd->add_option("--detections", epck.detections_path, "Predicted detections CSV")
      ->required();
  epck_cmd->add_option("--truth", epck.truth_path, "Ground-truth labels JSONL")->required();
  epck_cmd->add_option("--scale", epck.scale, "Normalization scale, px (the 0.7*head-size slot)");
  epck_cmd->add_option("--sigmas", epck.sigma_grid, "Threshold grid: number or lo:step:hi");
  epck_cmd->add_option("--output", epck.output_path, "Output CSV ('-' = stdout)");

  EvalHeatmapArgs eheat;
  auto* eheat_cmd = eval_cmd->add_subcommand("heatmap", "View-angle outlier heatmap");
  eheat_cmd->add_option("--calibration", eheat.calibration_path, "Camera calibration JSON")
      ->required();
  eheat_cmd->add_option("--triangulation", eheat.triangulation_path, "Triangulation JSONL")
      ->required();
  eheat_cmd->add_option("--detections", eheat.detections_path, "Detections CSV")->required();
  eheat_cmd->add_option("--bin-deg", eheat.bin_deg, "Angular bin size, degrees");
  eheat_cmd->add_option("--output", eheat.output_path, "Output CSV ('-' = stdout)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic capture fixture");
  synth_cmd->add_option("--config", synth.config_path, "Pipeline config with [scene]")
      ->required();
  synth_cmd->add_option("--out-calibration", synth.out_calibration, "Calibration JSON to write");
  synth_cmd->add_option("--out-detections", synth.out_detections, "Detections CSV to write");
  synth_cmd->add_option("--out-truth", synth.out_truth, "Ground-truth labels JSONL to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  if (dump_defaults) {
    std::cout << mvb::dump_default_config();
    return 0;
  }
  if (tri_cmd->parsed()) return cmd_triangulate(tri);
  if (boot_cmd->parsed()) return cmd_bootstrap(boot);
  if (plan_cmd->parsed()) return cmd_plan(plan);
  if (eval_cmd->parsed()) {
    if (epck_cmd->parsed()) return cmd_eval_pck(epck);
    return cmd_eval_heatmap(eheat);
  }
  if (synth_cmd->parsed()) return cmd_synth(synth);
  std::cout << app.help();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mvb::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const mvb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
