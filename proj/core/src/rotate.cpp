#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aos/augment.hpp"

namespace aos {
namespace {

// Exact cosine/sine for multiples of 90 degrees so that lattice rotations
// resample on pixel centres.
std::pair<double, double> cos_sin(double deg) {
  const double a = std::fmod(std::fmod(deg, 360.0) + 360.0, 360.0);
  if (a == 0.0) return {1.0, 0.0};
  if (a == 90.0) return {0.0, 1.0};
  if (a == 180.0) return {-1.0, 0.0};
  if (a == 270.0) return {0.0, -1.0};
  const double r = deg_to_rad(a);
  return {std::cos(r), std::sin(r)};
}

template <typename T>
double sample(const Image<T>& img, double x, double y) {
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const double top = img.at(x0, y0) + ax * (static_cast<double>(img.at(x1, y0)) - img.at(x0, y0));
  const double bottom = img.at(x0, y1) + ax * (static_cast<double>(img.at(x1, y1)) - img.at(x0, y1));
  return top + ay * (bottom - top);
}

template <typename T>
Image<T> rotate_impl(const Image<T>& img, const Rotation2D& rot) {
  if (img.width != rot.src_width || img.height != rot.src_height) {
    throw std::invalid_argument("rotate_image: rotation was made for another image size");
  }
  Image<T> out(rot.dst_width, rot.dst_height);
  if (img.empty()) {
    return out;
  }
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Vec2 s = rot.inverse(pixel_center(x, y));
      const double v = sample(img, s.x(), s.y());
      if constexpr (std::is_floating_point_v<T>) {
        out.at(x, y) = static_cast<T>(v);
      } else {
        out.at(x, y) = static_cast<T>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace

Vec2 Rotation2D::forward(const Vec2& src) const {
  const auto [c, s] = cos_sin(angle_deg);
  const double x = src.x() - 0.5 * src_width;
  const double y = src.y() - 0.5 * src_height;
  return {c * x - s * y + 0.5 * dst_width, s * x + c * y + 0.5 * dst_height};
}

Vec2 Rotation2D::inverse(const Vec2& dst) const {
  const auto [c, s] = cos_sin(angle_deg);
  const double x = dst.x() - 0.5 * dst_width;
  const double y = dst.y() - 0.5 * dst_height;
  return {c * x + s * y + 0.5 * src_width, -s * x + c * y + 0.5 * src_height};
}

std::pair<int, int> rotated_crop_size(int w, int h, double angle_deg) {
  if (w <= 0 || h <= 0) {
    return {0, 0};
  }
  const auto [c, s] = cos_sin(angle_deg);
  const double sin_a = std::abs(s);
  const double cos_a = std::abs(c);
  if (sin_a == 0.0) return {w, h};
  if (cos_a == 0.0) return {h, w};
  const bool wide = w >= h;
  const double long_side = wide ? w : h;
  const double short_side = wide ? h : w;
  double wr = 0.0;
  double hr = 0.0;
  if (short_side <= 2.0 * sin_a * cos_a * long_side || std::abs(sin_a - cos_a) < 1e-10) {
    // Half-constrained: two crop corners touch the longer sides.
    const double x = 0.5 * short_side;
    wr = wide ? x / sin_a : x / cos_a;
    hr = wide ? x / cos_a : x / sin_a;
  } else {
    const double cos_2a = cos_a * cos_a - sin_a * sin_a;
    wr = (w * cos_a - h * sin_a) / cos_2a;
    hr = (h * cos_a - w * sin_a) / cos_2a;
  }
  return {static_cast<int>(std::floor(wr + 1e-9)), static_cast<int>(std::floor(hr + 1e-9))};
}

Rotation2D make_rotation(int width, int height, double angle_deg) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("make_rotation: empty image");
  }
  if (!std::isfinite(angle_deg)) {
    throw std::invalid_argument("make_rotation: angle is not finite");
  }
  const auto [dw, dh] = rotated_crop_size(width, height, angle_deg);
  return {angle_deg, width, height, dw, dh};
}

HdrImage rotate_image(const HdrImage& img, const Rotation2D& rot) { return rotate_impl(img, rot); }
GrayImage rotate_image(const GrayImage& img, const Rotation2D& rot) { return rotate_impl(img, rot); }

}  // namespace aos
