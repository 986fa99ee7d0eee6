#pragma once

#include <algorithm>
#include <string>

#include "aos/geometry.hpp"

namespace aos {

/// Axis-aligned box in continuous pixel coordinates; pixel (u, v) spans
/// [u, u + 1) x [v, v + 1).
struct BoundingBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return valid() ? width() * height() : 0.0; }
  Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  bool valid() const { return xmin < xmax && ymin < ymax; }

  BoundingBox clipped(double w, double h) const {
    return {std::clamp(xmin, 0.0, w), std::clamp(ymin, 0.0, h), std::clamp(xmax, 0.0, w),
            std::clamp(ymax, 0.0, h)};
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Ground-truth box tied to the person it was projected from.
struct LabelBox {
  BoundingBox box;
  int person_id = 0;

  bool operator==(const LabelBox&) const = default;
};

struct Detection {
  BoundingBox bbox;
  double confidence = 0.0;
  std::string image_id;

  bool operator==(const Detection&) const = default;
};

}  // namespace aos
