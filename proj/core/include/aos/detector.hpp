#pragma once

// Training-free person detector: bright connected blobs above a per-image
// percentile threshold.

#include <string>
#include <vector>

#include "aos/box.hpp"
#include "aos/image.hpp"

namespace aos {

struct DetectorConfig {
  double threshold_percentile = 0.98;
  int min_area = 9;       // px^2
  int max_area = 10000;   // px^2

  void validate() const;
};

/// Minimum reported confidence; the evaluation discards anything below it.
inline constexpr double kMinConfidence = 0.005;

/// Value at the percentile position floor(p * (N - 1)) of the sorted pixels.
std::uint8_t percentile_value(const GrayImage& img, double p);

/// Pixels strictly above the percentile value are grouped into 8-connected
/// components; components whose area lies in [min_area, max_area] become
/// detections with confidence (mean - thr) / (255 - thr), clamped to
/// [kMinConfidence, 1]. Detections are ordered by their first pixel in
/// row-major order.
std::vector<Detection> detect_blobs(const GrayImage& img, const DetectorConfig& cfg,
                                    const std::string& image_id = {});

}  // namespace aos
