#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aos/augment.hpp"

namespace aos {
namespace {

constexpr int kTiles = 8;
constexpr double kClipLimit = 0.01;

struct TileAxis {
  int count;
  double size;

  int tile_of(int p, int extent) const {
    return static_cast<int>(static_cast<long long>(p) * count / extent);
  }

  // Lower tile index and blend weight towards the next tile for pixel p.
  std::pair<int, double> blend(int p) const {
    const double f = (p + 0.5) / size - 0.5;
    if (f <= 0.0) {
      return {0, 0.0};
    }
    const int t = static_cast<int>(f);
    if (t >= count - 1) {
      return {count - 1, 0.0};
    }
    return {t, f - t};
  }
};

}  // namespace

HdrImage ahe(const HdrImage& img, int bins, const Mask* mask) {
  if (bins < 2) {
    throw std::invalid_argument("ahe: need at least 2 bins");
  }
  if (mask && (mask->width != img.width || mask->height != img.height)) {
    throw std::invalid_argument("ahe: mask size differs from image");
  }
  auto valid = [&](std::size_t i) { return !mask || mask->samples[i] != 0; };

  HdrImage out(img.width, img.height, 0.0f);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (valid(i)) {
      lo = std::min(lo, static_cast<double>(img.samples[i]));
      hi = std::max(hi, static_cast<double>(img.samples[i]));
    }
  }
  if (!(hi > lo)) {
    return out;
  }
  auto bin_of = [&](float v) {
    return std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
  };

  const TileAxis ax{std::min(kTiles, img.width), static_cast<double>(img.width) / std::min(kTiles, img.width)};
  const TileAxis ay{std::min(kTiles, img.height), static_cast<double>(img.height) / std::min(kTiles, img.height)};
  const std::size_t nb = static_cast<std::size_t>(bins);
  std::vector<double> maps(static_cast<std::size_t>(ax.count) * ay.count * nb, 0.0);
  std::vector<double> pixels(static_cast<std::size_t>(ax.count) * ay.count, 0.0);

  for (int y = 0; y < img.height; ++y) {
    const int ty = ay.tile_of(y, img.height);
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = img.index(x, y);
      if (!valid(i)) {
        continue;
      }
      const std::size_t t = static_cast<std::size_t>(ty) * ax.count + ax.tile_of(x, img.width);
      maps[t * nb + bin_of(img.samples[i])] += 1.0;
      pixels[t] += 1.0;
    }
  }

  for (std::size_t t = 0; t < pixels.size(); ++t) {
    double* h = maps.data() + t * nb;
    const double n = pixels[t];
    if (n == 0.0) {
      for (std::size_t b = 0; b < nb; ++b) {
        h[b] = static_cast<double>(b) / static_cast<double>(nb - 1);
      }
      continue;
    }
    const double clip = std::max(kClipLimit * n, n / bins);
    double excess = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (h[b] > clip) {
        excess += h[b] - clip;
        h[b] = clip;
      }
    }
    const double share = excess / bins;
    double cum = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      cum += h[b] + share;
      h[b] = std::min(1.0, cum / n);
    }
  }

  for (int y = 0; y < img.height; ++y) {
    const auto [ty, wy] = ay.blend(y);
    const int ty1 = std::min(ty + 1, ay.count - 1);
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = img.index(x, y);
      if (!valid(i)) {
        continue;
      }
      const auto [tx, wx] = ax.blend(x);
      const int tx1 = std::min(tx + 1, ax.count - 1);
      const std::size_t b = static_cast<std::size_t>(bin_of(img.samples[i]));
      auto m = [&](int cx, int cy) {
        return maps[(static_cast<std::size_t>(cy) * ax.count + cx) * nb + b];
      };
      const double top = m(tx, ty) + wx * (m(tx1, ty) - m(tx, ty));
      const double bottom = m(tx, ty1) + wx * (m(tx1, ty1) - m(tx, ty1));
      out.samples[i] = static_cast<float>(std::clamp(top + wy * (bottom - top), 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace aos
