#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aos {

/// Row-major single-channel raster.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> samples;

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) {
      throw std::invalid_argument("Image: negative size");
    }
  }

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  T& at(int x, int y) { return samples[index(x, y)]; }
  const T& at(int x, int y) const { return samples[index(x, y)]; }

  std::span<T> row(int y) { return {samples.data() + index(0, y), static_cast<std::size_t>(width)}; }
  std::span<const T> row(int y) const {
    return {samples.data() + index(0, y), static_cast<std::size_t>(width)};
  }

  bool operator==(const Image&) const = default;
};

/// High-dynamic-range relative temperatures.
using HdrImage = Image<float>;
/// 8-bit tone-mapped grayscale.
using GrayImage = Image<std::uint8_t>;
/// Per-pixel contributor counts of an integral image.
using CountMap = Image<std::uint16_t>;

/// Throws std::invalid_argument when a sample is NaN or infinite.
void require_finite(const HdrImage& img);

/// Portable float map, grayscale "Pf", little-endian, rows stored bottom-up.
void write_pfm(const std::filesystem::path& path, const HdrImage& img);
HdrImage read_pfm(const std::filesystem::path& path);

/// Binary PGM (P5), maxval 255.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

/// Binary PGM (P5), maxval 65535, big-endian samples.
void write_pgm16(const std::filesystem::path& path, const CountMap& img);
CountMap read_pgm16(const std::filesystem::path& path);

/// Arithmetic mean of all samples.
double mean(const HdrImage& img);

}  // namespace aos
