#pragma once

// End-to-end runs: simulate -> integrate -> (augment) -> detect -> evaluate,
// once on integral images and once on the single images, with a manifest of
// every output file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aos/augment.hpp"
#include "aos/detector.hpp"
#include "aos/eval.hpp"
#include "aos/lightfield.hpp"
#include "aos/simulator.hpp"

namespace aos {

struct ScanSpec {
  double aperture = 30.0;       // meters
  double along_spacing = 1.0;   // meters between poses on a line
  double line_spacing = 3.0;    // meters between lines
  double altitude = 35.0;       // meters above the ground

  void validate() const;
};

struct CameraSpec {
  double fov_deg = 50.82;
  int width = 512;
  int height = 512;

  CameraIntrinsics intrinsics() const { return fov_to_intrinsics(fov_deg, width, height); }
};

enum class AheMode { kOff, kOn, kBoth };

AheMode parse_ahe_mode(const std::string& s);
std::string to_string(AheMode mode);

struct AugmentConfig {
  bool enabled = false;
  AheMode ahe = AheMode::kBoth;
  int rotations = 10;
};

struct NamedScene {
  std::string name;
  SceneSpec spec;
};

struct RunConfig {
  std::vector<NamedScene> scenes;
  ScanSpec scan;
  CameraSpec camera;
  FocusSearch focus;
  int focus_resolution = 256;  // virtual image side used while searching focus
  AugmentConfig augment;
  AheMode detect_ahe = AheMode::kOff;  // kBoth runs the dual-pass merge
  DetectorConfig detector;
  EvalConfig eval;
  int single_stride = 1;  // every n-th view enters the single-image arm
  std::uint64_t rng_seed = 0;
  std::filesystem::path output_root = "run";
  int threads = 0;
  bool write_captures = true;

  void validate() const;
};

/// Loads a JSON run config. Scene entries ("scene" or "scenes") are paths
/// relative to the config file or inline scene objects. Throws FormatError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Scene seed actually used: the run seed mixed with the scene's own seed and
/// its index in the run.
std::uint64_t scene_seed(std::uint64_t run_seed, std::uint64_t spec_seed, std::size_t index);

/// Per-scene artifacts of both arms, before any file I/O.
struct SceneRun {
  std::string name;
  Scene scene;
  LightFieldCapture capture;
  VirtualCamera camera;
  FocalPlane focus;
  IntegralImage integral;
  GrayImage integral_8bit;
  std::optional<GrayImage> integral_ahe_8bit;
  SceneEval integral_eval;
  SceneEval single_eval;
  std::vector<LabelBox> integral_labels;
  std::vector<std::vector<LabelBox>> single_labels;
};

/// Simulates one scene and runs detection on its integral image and on its
/// single images. Labels on both arms come from the 3D person outlines seated
/// on the optimized focal plane.
SceneRun run_scene(const NamedScene& scene, std::size_t index, const RunConfig& cfg);

struct PipelineResult {
  int status = 0;  // 0 ok, 1 stage failure
  std::string error;
  std::optional<EvalReport> integral_report;
  std::optional<EvalReport> single_report;
  std::filesystem::path manifest;
};

/// Runs every stage, writing outputs under
/// <root>/{captures,integrals,augmented,detections,reports}/ and
/// <root>/manifest.json. Ground-truth boxes go to detections/gt/ with the same
/// relative layout as the detections of each arm. A failing stage stops the
/// run with status 1 and a partial manifest.
PipelineResult run_pipeline(const RunConfig& cfg);

/// Table-style text of both arms as printed by `aos compare`.
std::string format_comparison(const EvalReport& integral, const EvalReport& single);

}  // namespace aos
