#pragma once

// Detection evaluation: confidence and border filtering, dual-pass merging,
// greedy matching at an IoU threshold, all-point interpolated average
// precision, and per-scene report rows.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aos/box.hpp"

namespace aos {

struct EvalConfig {
  double iou_threshold = 0.25;
  double confidence_floor = 0.005;
  int border_margin = 5;       // pixels
  int median_box_size = 35;    // pixels; the margin is derived from it
  double nms_threshold = 0.25; // IoU used when merging plain and AHE passes

  /// ceil(median_box_size * iou_threshold / 2).
  static int derived_margin(int median_box_size, double iou_threshold) {
    return static_cast<int>(std::ceil(median_box_size * iou_threshold / 2.0 - 1e-12));
  }

  void validate() const;
};

double iou(const BoundingBox& a, const BoundingBox& b);

/// Greedy suppression: confidence descending, ties to the smaller box, then
/// to input order. A detection survives when its IoU with every survivor is
/// below `iou_thr`. Survivors keep that processing order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_thr);

/// Union of both passes followed by nms.
std::vector<Detection> merge_dual_pass(std::span<const Detection> plain,
                                       std::span<const Detection> ahe, double iou_thr);

/// Keeps detections whose box centre is at least `margin` pixels from every
/// image border.
std::vector<Detection> border_filter(std::span<const Detection> dets, double margin, int width,
                                     int height);

/// Keeps detections with confidence >= floor.
std::vector<Detection> confidence_filter(std::span<const Detection> dets, double floor);

struct MatchResult {
  std::vector<bool> true_positive;  // per input detection
  int tp = 0;
  int fp = 0;
};

/// Detections in descending confidence (ties by input order) each claim the
/// unmatched ground truth of highest IoU >= iou_thr.
MatchResult match_detections(std::span<const Detection> dets, std::span<const BoundingBox> gts,
                             double iou_thr);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult {
  std::optional<double> ap;  // empty when there is no ground truth
  std::vector<PrPoint> curve;
  int gt = 0;
  int tp = 0;
  int fp = 0;
};

/// One image's detections and ground truth.
struct EvalImage {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<Detection> dets;
  std::optional<std::vector<Detection>> ahe_dets;  // second pass, merged when present
  std::vector<BoundingBox> gts;
};

/// Matches every image separately, then ranks all detections together by
/// confidence (ties by image order, then detection order) and integrates the
/// monotone precision envelope over recall.
ApResult average_precision(std::span<const EvalImage> images, double iou_thr);

/// Area under the all-point precision envelope of a ranked TP/FP sequence.
double envelope_ap(std::span<const PrPoint> curve);

enum class EvalMode { kIntegral, kSingle };

struct SceneEval {
  std::string id;
  std::vector<EvalImage> images;
};

struct SceneRow {
  std::string id;
  double gt = 0.0;  // averages over images in single mode
  std::optional<double> ap;
  double tp = 0.0;
  double fp = 0.0;
};

struct EvalReport {
  EvalMode mode = EvalMode::kIntegral;
  std::vector<SceneRow> scenes;
  SceneRow aggregate;                // pooled over every image of every scene
  std::optional<double> mean_scene_ap;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<PrPoint> pr_curve;     // pooled
};

/// Applies the protocol per image (confidence floor, border filter, dual-pass
/// merge when an AHE pass is present) and reports per-scene rows plus a pooled
/// aggregate. Integral mode pools a scene's images; single mode averages AP
/// over the scene's images that have ground truth and averages the counts
/// over all of its images.
EvalReport scene_report(std::span<const SceneEval> scenes, const EvalConfig& cfg,
                        EvalMode mode = EvalMode::kIntegral);

/// The filtered, merged detections scene_report evaluates for one image.
std::vector<Detection> prepare_detections(const EvalImage& image, const EvalConfig& cfg);

}  // namespace aos
