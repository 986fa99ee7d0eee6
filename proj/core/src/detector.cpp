#include "aos/detector.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace aos {

void DetectorConfig::validate() const {
  if (!(threshold_percentile > 0.0 && threshold_percentile < 1.0)) {
    throw std::invalid_argument("detector: threshold_percentile must lie in (0, 1)");
  }
  if (!(min_area > 0 && min_area < max_area)) {
    throw std::invalid_argument("detector: need 0 < min_area < max_area");
  }
}

std::uint8_t percentile_value(const GrayImage& img, double p) {
  if (img.empty()) {
    throw std::invalid_argument("percentile_value: empty image");
  }
  std::array<std::size_t, 256> hist{};
  for (auto v : img.samples) {
    ++hist[v];
  }
  const std::size_t rank = static_cast<std::size_t>(p * static_cast<double>(img.size() - 1));
  std::size_t cum = 0;
  for (int v = 0; v < 256; ++v) {
    cum += hist[v];
    if (cum > rank) {
      return static_cast<std::uint8_t>(v);
    }
  }
  return 255;
}

std::vector<Detection> detect_blobs(const GrayImage& img, const DetectorConfig& cfg,
                                    const std::string& image_id) {
  cfg.validate();
  std::vector<Detection> dets;
  if (img.empty()) {
    return dets;
  }
  const int thr = percentile_value(img, cfg.threshold_percentile);
  if (thr >= 255) {
    return dets;
  }
  std::vector<std::uint8_t> seen(img.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t start = img.index(x, y);
      if (seen[start] || img.samples[start] <= thr) {
        continue;
      }
      seen[start] = 1;
      stack.assign(1, {x, y});
      long long area = 0;
      double sum = 0.0;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        sum += img.at(cx, cy);
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) {
              continue;
            }
            const std::size_t ni = img.index(nx, ny);
            if (!seen[ni] && img.samples[ni] > thr) {
              seen[ni] = 1;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      if (area < cfg.min_area || area > cfg.max_area) {
        continue;
      }
      const double mean = sum / static_cast<double>(area);
      const double conf = std::clamp((mean - thr) / (255.0 - thr), kMinConfidence, 1.0);
      dets.push_back({{static_cast<double>(x0), static_cast<double>(y0),
                       static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)},
                      conf,
                      image_id});
    }
  }
  return dets;
}

}  // namespace aos
