#include "mvb/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <system_error>
#include <vector>

#include "mvb/format.hpp"

namespace mvb {

namespace {

[[noreturn]] void fail(long line, const std::string& what) {
  throw ParseError("config: line " + std::to_string(line) + ": " + what);
}

struct RawValue {
  std::string text;
  long line = 0;
  bool consumed = false;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

class Settings {
 public:
  explicit Settings(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    long line = 0;
    std::string section;
    while (std::getline(in, raw)) {
      ++line;
      const std::string s = trim(strip_comment(raw));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        if (!valid_name(section)) fail(line, "bad section name");
        if (!sections_.insert(section).second) fail(line, "duplicate section [" + section + "]");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail(line, "expected key = value");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (!valid_name(key)) fail(line, "bad key name");
      if (section.empty()) fail(line, "key outside a section");
      if (value.empty()) fail(line, "missing value");
      const std::string full = section + "." + key;
      if (!values_.emplace(full, RawValue{value, line, false}).second)
        fail(line, "duplicate key " + full);
    }
  }

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }

  const RawValue* take(const std::string& full) {
    const auto it = values_.find(full);
    if (it == values_.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
  }

  void expect_sections(std::initializer_list<std::string> known) {
    for (const auto& s : sections_) {
      bool ok = false;
      for (const auto& k : known) ok = ok || s == k;
      if (!ok) throw ParseError("config: unknown section [" + s + "]");
    }
  }

  void finish() const {
    long first = 0;
    std::string offender;
    for (const auto& [key, v] : values_) {
      if (v.consumed) continue;
      if (first == 0 || v.line < first) {
        first = v.line;
        offender = key;
      }
    }
    if (first > 0) fail(first, "unknown key " + offender);
  }

 private:
  std::map<std::string, RawValue> values_;
  std::set<std::string> sections_;
};

void read_key(Settings& s, const std::string& key, double& out) {
  if (const auto* v = s.take(key)) {
    try {
      out = parse_double(v->text, key);
    } catch (const ParseError&) {
      fail(v->line, "expected a number for " + key);
    }
  }
}

void read_key(Settings& s, const std::string& key, int& out) {
  if (const auto* v = s.take(key)) {
    try {
      const long parsed = parse_long(v->text, key);
      if (parsed < std::numeric_limits<int>::min() || parsed > std::numeric_limits<int>::max())
        fail(v->line, "integer out of range for " + key);
      out = static_cast<int>(parsed);
    } catch (const ParseError&) {
      fail(v->line, "expected an integer for " + key);
    }
  }
}

void read_key(Settings& s, const std::string& key, std::uint64_t& out) {
  if (const auto* v = s.take(key)) {
    std::uint64_t parsed = 0;
    const char* b = v->text.data();
    const char* e = b + v->text.size();
    const auto r = std::from_chars(b, e, parsed);
    if (r.ec != std::errc{} || r.ptr != e) fail(v->line, "expected an unsigned integer for " + key);
    out = parsed;
  }
}

void read_key(Settings& s, const std::string& key, std::string& out) {
  if (const auto* v = s.take(key)) {
    const std::string& t = v->text;
    if (t.size() < 2 || t.front() != '"' || t.back() != '"')
      fail(v->line, "expected a quoted string for " + key);
    const std::string body = t.substr(1, t.size() - 2);
    if (body.find('"') != std::string::npos) fail(v->line, "stray quote in " + key);
    out = body;
  }
}

std::vector<double> parse_number_array(const RawValue& v, const std::string& key) {
  const std::string& t = v.text;
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    fail(v.line, "expected an array for " + key);
  std::vector<double> out;
  const std::string body = t.substr(1, t.size() - 2);
  if (trim(body).empty()) return out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string token = trim(item);
    if (token.empty()) fail(v.line, "empty array entry in " + key);
    try {
      out.push_back(parse_double(token, key));
    } catch (const ParseError&) {
      fail(v.line, "array entries must be numbers in " + key);
    }
  }
  return out;
}

bool read_occluders(Settings& s, const std::string& key, std::vector<Capsule>& out) {
  const auto* v = s.take(key);
  if (!v) return false;
  const auto nums = parse_number_array(*v, key);
  if (nums.size() % 7 != 0)
    fail(v->line, key + " wants flat capsules: ax,ay,az,bx,by,bz,radius");
  out.clear();
  for (std::size_t i = 0; i < nums.size(); i += 7) {
    Capsule c;
    c.a = Vec3(nums[i], nums[i + 1], nums[i + 2]);
    c.b = Vec3(nums[i + 3], nums[i + 4], nums[i + 5]);
    c.radius = nums[i + 6];
    out.push_back(c);
  }
  return true;
}

}  // namespace

void PipelineConfig::validate() const {
  ransac.validate();
  filter.validate();
  if (has_scene) scene.validate();
  if (initial_pck < 0.0 || initial_pck > 1.0)
    throw InvariantError("config: initial pck outside [0, 1]");
  DetectorModel probe = detector;
  probe.pck.assign(HandSkeleton::keypoint_count, initial_pck);
  if (has_scene) {
    probe.image_width = scene.image_width;
    probe.image_height = scene.image_height;
  }
  probe.validate();
  if (!(trainer_kappa > 0.0)) throw InvariantError("config: trainer kappa must be positive");
  if (iterations < 1) throw InvariantError("config: iterations must be >= 1");
  if (jobs < 0) throw InvariantError("config: jobs must be >= 0");
}

PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir) {
  Settings s(text);
  s.expect_sections({"paths", "scene", "ransac", "filter", "detector", "trainer", "run"});

  PipelineConfig cfg;
  read_key(s, "paths.calibration", cfg.calibration_path);
  read_key(s, "paths.detections", cfg.detections_path);
  read_key(s, "paths.output_dir", cfg.output_dir);

  cfg.has_scene = s.has_section("scene");
  read_key(s, "scene.views", cfg.scene.views);
  read_key(s, "scene.frames", cfg.scene.frames);
  read_key(s, "scene.image_width", cfg.scene.image_width);
  read_key(s, "scene.image_height", cfg.scene.image_height);
  read_key(s, "scene.focal", cfg.scene.focal);
  read_key(s, "scene.ring_radius_cm", cfg.scene.ring_radius_cm);
  read_key(s, "scene.min_elevation_deg", cfg.scene.min_elevation_deg);
  read_key(s, "scene.max_elevation_deg", cfg.scene.max_elevation_deg);
  read_key(s, "scene.motion_translation_cm", cfg.scene.motion_translation_cm);
  read_key(s, "scene.motion_rotation_deg", cfg.scene.motion_rotation_deg);
  read_key(s, "scene.seed", cfg.scene.seed);
  const bool scene_occluders = read_occluders(s, "scene.occluders", cfg.scene.occluders);

  read_key(s, "ransac.confidence_threshold", cfg.ransac.confidence_threshold);
  read_key(s, "ransac.reproj_inlier_sigma", cfg.ransac.reproj_inlier_sigma);
  read_key(s, "ransac.min_inliers", cfg.ransac.min_inliers);
  read_key(s, "ransac.max_ransac_iterations", cfg.ransac.max_ransac_iterations);
  read_key(s, "ransac.rng_seed", cfg.ransac.rng_seed);

  read_key(s, "filter.min_avg_inliers", cfg.filter.min_avg_inliers);
  read_key(s, "filter.min_avg_confidence", cfg.filter.min_avg_confidence);
  read_key(s, "filter.max_avg_reproj_error", cfg.filter.max_avg_reproj_error);
  read_key(s, "filter.velocity_outlier_threshold", cfg.filter.velocity_outlier_threshold);
  read_key(s, "filter.bone_metacarpal_max", cfg.filter.bone_length_max.metacarpal);
  read_key(s, "filter.bone_proximal_max", cfg.filter.bone_length_max.proximal);
  read_key(s, "filter.bone_other_max", cfg.filter.bone_length_max.other);
  read_key(s, "filter.window_size", cfg.filter.window_size);
  read_key(s, "filter.n_best", cfg.filter.n_best);
  const bool filter_occluders = read_occluders(s, "filter.occluders", cfg.filter.occluders);
  if (scene_occluders && !filter_occluders) cfg.filter.occluders = cfg.scene.occluders;

  read_key(s, "detector.initial_pck", cfg.initial_pck);
  read_key(s, "detector.sigma_pck", cfg.detector.sigma_pck);
  read_key(s, "detector.correct_noise_sigma", cfg.detector.correct_noise_sigma);
  read_key(s, "detector.confidence_correct_lo", cfg.detector.confidence_correct_lo);
  read_key(s, "detector.confidence_correct_hi", cfg.detector.confidence_correct_hi);
  read_key(s, "detector.confidence_wrong_lo", cfg.detector.confidence_wrong_lo);
  read_key(s, "detector.confidence_wrong_hi", cfg.detector.confidence_wrong_hi);
  read_key(s, "detector.rng_seed", cfg.detector.rng_seed);

  read_key(s, "trainer.kappa", cfg.trainer_kappa);

  read_key(s, "run.iterations", cfg.iterations);
  read_key(s, "run.jobs", cfg.jobs);

  s.finish();

  auto resolve = [&](std::string& path) {
    if (path.empty()) return;
    const std::filesystem::path p(path);
    if (p.is_relative() && !base_dir.empty()) path = (base_dir / p).string();
  };
  resolve(cfg.calibration_path);
  resolve(cfg.detections_path);
  resolve(cfg.output_dir);
  for (const std::string& p : {cfg.calibration_path, cfg.detections_path})
    if (!p.empty() && !std::filesystem::exists(p))
      throw ParseError("config: referenced file does not exist: " + p);

  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_pipeline_config(text.str(), path.parent_path());
}

std::string dump_default_config() {
  const PipelineConfig d;
  std::ostringstream out;
  out << "[paths]\n"
      << "calibration = \"\"   # camera JSON; required by triangulate\n"
      << "detections = \"\"    # detections CSV; required by triangulate\n"
      << "output_dir = \"" << d.output_dir << "\"\n\n";
  out << "[scene]              # synthetic capture; required by bootstrap\n"
      << "views = " << d.scene.views << "\n"
      << "frames = " << d.scene.frames << "\n"
      << "image_width = " << d.scene.image_width << "\n"
      << "image_height = " << d.scene.image_height << "\n"
      << "focal = " << format_double(d.scene.focal) << "\n"
      << "ring_radius_cm = " << format_double(d.scene.ring_radius_cm) << "\n"
      << "min_elevation_deg = " << format_double(d.scene.min_elevation_deg) << "\n"
      << "max_elevation_deg = " << format_double(d.scene.max_elevation_deg) << "\n"
      << "motion_translation_cm = " << format_double(d.scene.motion_translation_cm) << "\n"
      << "motion_rotation_deg = " << format_double(d.scene.motion_rotation_deg) << "\n"
      << "seed = " << d.scene.seed << "\n"
      << "occluders = []       # flat ax,ay,az,bx,by,bz,radius per capsule, cm\n\n";
  out << "[ransac]\n"
      << "confidence_threshold = " << format_double(d.ransac.confidence_threshold) << "\n"
      << "reproj_inlier_sigma = " << format_double(d.ransac.reproj_inlier_sigma) << "\n"
      << "min_inliers = " << d.ransac.min_inliers << "\n"
      << "max_ransac_iterations = " << d.ransac.max_ransac_iterations << "\n"
      << "rng_seed = " << d.ransac.rng_seed << "\n\n";
  out << "[filter]\n"
      << "min_avg_inliers = " << format_double(d.filter.min_avg_inliers) << "\n"
      << "min_avg_confidence = " << format_double(d.filter.min_avg_confidence) << "\n"
      << "max_avg_reproj_error = " << format_double(d.filter.max_avg_reproj_error) << "\n"
      << "velocity_outlier_threshold = " << format_double(d.filter.velocity_outlier_threshold)
      << "\n"
      << "bone_metacarpal_max = " << format_double(d.filter.bone_length_max.metacarpal) << "\n"
      << "bone_proximal_max = " << format_double(d.filter.bone_length_max.proximal) << "\n"
      << "bone_other_max = " << format_double(d.filter.bone_length_max.other) << "\n"
      << "window_size = " << d.filter.window_size << "\n"
      << "n_best = " << d.filter.n_best << "\n"
      << "occluders = []       # defaults to [scene] occluders when omitted\n\n";
  out << "[detector]\n"
      << "initial_pck = " << format_double(d.initial_pck) << "\n"
      << "sigma_pck = " << format_double(d.detector.sigma_pck) << "\n"
      << "correct_noise_sigma = " << format_double(d.detector.correct_noise_sigma) << "\n"
      << "confidence_correct_lo = " << format_double(d.detector.confidence_correct_lo) << "\n"
      << "confidence_correct_hi = " << format_double(d.detector.confidence_correct_hi) << "\n"
      << "confidence_wrong_lo = " << format_double(d.detector.confidence_wrong_lo) << "\n"
      << "confidence_wrong_hi = " << format_double(d.detector.confidence_wrong_hi) << "\n"
      << "rng_seed = " << d.detector.rng_seed << "\n\n";
  out << "[trainer]\n"
      << "kappa = " << format_double(d.trainer_kappa) << "\n\n";
  out << "[run]\n"
      << "iterations = " << d.iterations << "\n"
      << "jobs = " << d.jobs << "          # 0 uses every core\n";
  return out.str();
}

}  // namespace mvb
