#pragma once

#include <filesystem>
#include <string>

#include "mvb/bootstrap.hpp"
#include "mvb/scene.hpp"

namespace mvb {

/// Everything a pipeline run needs, loaded from one TOML-style file with
/// sections [paths], [scene], [ransac], [filter], [detector], [trainer] and
/// [run]. Unknown sections or keys are rejected with the offending line
/// number, as are referenced files that do not exist.
struct PipelineConfig {
  std::string calibration_path;
  std::string detections_path;
  std::string output_dir = "out";

  bool has_scene = false;  // true when the file carries a [scene] section
  SceneConfig scene;

  RansacConfig ransac;
  FilterConfig filter;
  DetectorModel detector;   // pck vector filled from initial_pck at run time
  double initial_pck = 0.6;

  double trainer_kappa = 1000.0;
  int iterations = 3;
  int jobs = 0;

  void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir = {});

/// The full config with every default value, suitable as a starting file.
std::string dump_default_config();

}  // namespace mvb
