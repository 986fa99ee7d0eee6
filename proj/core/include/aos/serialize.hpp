#pragma once

// On-disk formats. Captures are a directory holding camera.json (intrinsics
// plus one pose per view) and views/<id>.pfm. Integral images are a PFM, a
// 16-bit PGM count map and a JSON sidecar. Boxes and detections are JSON
// lines. Parse failures raise FormatError naming the file and field.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aos/box.hpp"
#include "aos/lightfield.hpp"
#include "aos/simulator.hpp"

namespace aos {

namespace fs = std::filesystem;

/// Returns the files written.
std::vector<fs::path> write_capture(const fs::path& dir, const LightFieldCapture& capture);
LightFieldCapture read_capture(const fs::path& dir);

/// Writes <stem>.pfm, <stem>.count.pgm and <stem>.json; returns them.
std::vector<fs::path> write_integral(const fs::path& stem, const IntegralImage& img);
IntegralImage read_integral(const fs::path& stem);

SceneSpec read_scene_spec(const fs::path& path);
void write_scene_spec(const fs::path& path, const SceneSpec& spec);

std::vector<Label3D> read_labels3d(const fs::path& path);
void write_labels3d(const fs::path& path, std::span<const Label3D> labels);

std::vector<LabelBox> read_label_boxes(const fs::path& path);
void write_label_boxes(const fs::path& path, std::span<const LabelBox> boxes);

std::vector<Detection> read_detections(const fs::path& path);
void write_detections(const fs::path& path, std::span<const Detection> dets);

FocalPlane read_focal_plane(const fs::path& path);
void write_focal_plane(const fs::path& path, const FocalPlane& plane);

/// Whole-file helpers; throw IoError.
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace aos
