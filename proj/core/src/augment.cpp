#include "aos/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "aos/error.hpp"
#include "aos/hash.hpp"
#include "aos/parallel.hpp"

namespace aos {
namespace {

std::string numbered(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

}  // namespace

Mask valid_mask(const IntegralImage& img) {
  Mask m(img.count_map.width, img.count_map.height, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.samples[i] = img.count_map.samples[i] > 0 ? 1 : 0;
  }
  return m;
}

std::vector<AugmentationParams> generate_augmentation_set(int rotations, std::mt19937_64& rng) {
  if (rotations < 1) {
    throw std::invalid_argument("generate_augmentation_set: rotations must be >= 1");
  }
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  std::vector<double> angles(static_cast<std::size_t>(rotations));
  for (double& a : angles) {
    a = angle(rng);
  }
  std::vector<AugmentationParams> set;
  set.reserve(angles.size() * 27);
  for (double a : angles) {
    for (double dz : kFocusOffsets) {
      for (double tx : kTiltOffsets) {
        for (double ty : kTiltOffsets) {
          set.push_back({a, dz, tx, ty, false});
        }
      }
    }
  }
  return set;
}

std::vector<AugmentationParams> with_ahe_duals(std::span<const AugmentationParams> set) {
  std::vector<AugmentationParams> out;
  out.reserve(set.size() * 2);
  for (const auto& p : set) {
    out.push_back(p);
    out.back().ahe = false;
    out.push_back(p);
    out.back().ahe = true;
  }
  return out;
}

GrayImage tone_map(const HdrImage& img, const Mask* mask) {
  if (mask && (mask->width != img.width || mask->height != img.height)) {
    throw std::invalid_argument("tone_map: mask size differs from image");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (mask && !mask->samples[i]) {
      continue;
    }
    lo = std::min(lo, static_cast<double>(img.samples[i]));
    hi = std::max(hi, static_cast<double>(img.samples[i]));
  }
  GrayImage out(img.width, img.height, 0);
  if (!(hi > lo)) {
    return out;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (mask && !mask->samples[i]) {
      continue;
    }
    const double v = std::floor((img.samples[i] - lo) / span * 255.0 + 0.5);
    out.samples[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

ProjectedLabels project_labels(std::span<const Label3D> labels, const VirtualCamera& cam,
                               const Plane& plane, const Rotation2D* rotation) {
  if (std::abs(plane.normal.z()) < 1e-9) {
    throw std::invalid_argument("project_labels: label plane is vertical");
  }
  const double w = rotation ? rotation->dst_width : cam.intrinsics.width;
  const double h = rotation ? rotation->dst_height : cam.intrinsics.height;
  ProjectedLabels out;
  for (const auto& label : labels) {
    BoundingBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
    bool behind = false;
    for (const auto& v : label.polygon) {
      const Vec3 seated(v.x(), v.y(), plane.height_at(v.x(), v.y()));
      const auto proj = project_point(cam.intrinsics, cam.pose, seated);
      if (!proj) {
        behind = true;
        break;
      }
      const Vec2 p = rotation ? rotation->forward(proj->pixel) : proj->pixel;
      box.xmin = std::min(box.xmin, p.x());
      box.ymin = std::min(box.ymin, p.y());
      box.xmax = std::max(box.xmax, p.x());
      box.ymax = std::max(box.ymax, p.y());
    }
    if (behind) {
      out.warnings.push_back("label " + std::to_string(label.person_id) +
                             " has a vertex behind the camera; dropped");
      continue;
    }
    if (!box.valid()) {
      out.warnings.push_back("label " + std::to_string(label.person_id) +
                             " projects to a degenerate box; dropped");
      continue;
    }
    const BoundingBox clipped = box.clipped(w, h);
    if (!clipped.valid() || clipped.area() < kMinVisibleFraction * box.area()) {
      continue;
    }
    out.boxes.push_back({clipped, label.person_id});
  }
  return out;
}

GrayImage simulate_occlusion_patch(const GrayImage& img, std::span<const BoundingBox> labels,
                                   double density, std::mt19937_64& rng) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw std::invalid_argument("simulate_occlusion_patch: density must lie in [0, 1]");
  }
  GrayImage out = img;
  if (density == 0.0 || img.empty()) {
    return out;
  }
  std::vector<std::uint8_t> background;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double cx = x + 0.5;
      const double cy = y + 0.5;
      const bool labeled = std::any_of(labels.begin(), labels.end(), [&](const BoundingBox& b) {
        return cx >= b.xmin && cx < b.xmax && cy >= b.ymin && cy < b.ymax;
      });
      if (!labeled) {
        background.push_back(img.at(x, y));
      }
    }
  }
  if (background.empty()) {
    throw NoBackgroundSamples("simulate_occlusion_patch: every pixel is inside a label box");
  }

  constexpr int kMaxSide = 35;
  std::uniform_int_distribution<int> side(1, kMaxSide);
  std::uniform_int_distribution<std::size_t> pick(0, background.size() - 1);
  std::vector<std::uint8_t> covered(img.size(), 0);
  const std::size_t target = static_cast<std::size_t>(std::ceil(density * img.size()));
  std::size_t count = 0;
  while (count < target) {
    const int rw = side(rng);
    const int rh = side(rng);
    const int x0 = std::uniform_int_distribution<int>(1 - rw, img.width - 1)(rng);
    const int y0 = std::uniform_int_distribution<int>(1 - rh, img.height - 1)(rng);
    const std::uint8_t fill = background[pick(rng)];
    for (int y = std::max(0, y0); y < std::min(img.height, y0 + rh); ++y) {
      for (int x = std::max(0, x0); x < std::min(img.width, x0 + rw); ++x) {
        const std::size_t i = out.index(x, y);
        out.samples[i] = fill;
        if (!covered[i]) {
          covered[i] = 1;
          ++count;
        }
      }
    }
  }
  return out;
}

void augment_integral(const LightFieldCapture& capture, std::span<const Label3D> labels,
                      const FocalPlane& base, std::span<const AugmentationParams> set,
                      const AugmentSink& sink, const IntegralAugmentOptions& opts) {
  const Plane label_plane = resolve_plane(base, virtual_camera_at_center(capture, 0.0));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set[i];
    const VirtualCamera cam = virtual_camera_at_center(capture, p.up_angle_deg);
    const IntegralImage integral = integrate(capture, p.applied_to(base), cam, {opts.threads});
    const Mask mask = valid_mask(integral);
    AugmentedImage item;
    item.stem = numbered("int_", static_cast<int>(i), 4) + (p.ahe ? "_ahe" : "");
    item.image = p.ahe ? tone_map(ahe(integral.image, 512, &mask), &mask)
                       : tone_map(integral.image, &mask);
    auto projected = project_labels(labels, cam, label_plane);
    item.labels = std::move(projected.boxes);
    item.warnings = std::move(projected.warnings);
    sink(std::move(item));
  }
}

void augment_single(const LightFieldCapture& capture, std::span<const Label3D> labels,
                    const Plane& label_plane, std::uint64_t seed, const SingleAugmentOptions& opts,
                    const AugmentSink& sink) {
  capture.validate();
  if (opts.rotations < 1) {
    throw std::invalid_argument("augment_single: rotations must be >= 1");
  }
  for (std::size_t k = 0; k < capture.views.size(); ++k) {
    const View& view = capture.views[k];
    // One generator per view so that any subset of views reproduces the same output.
    std::mt19937_64 rng(hash_combine(seed, k));
    std::uniform_real_distribution<double> angle(0.0, 360.0);
    const VirtualCamera cam{view.pose, capture.intrinsics};
    for (int r = 0; r < opts.rotations; ++r) {
      const Rotation2D rot = make_rotation(view.image.width, view.image.height, angle(rng));
      const HdrImage rotated = rotate_image(view.image, rot);
      auto projected = project_labels(labels, cam, label_plane, &rot);
      std::vector<BoundingBox> boxes;
      for (const auto& b : projected.boxes) {
        boxes.push_back(b.box);
      }
      const std::string stem = numbered("v", static_cast<int>(k), 4) + numbered("_r", r, 2);
      auto emit = [&](GrayImage img, const std::string& name) {
        if (opts.occlusion_density > 0.0) {
          img = simulate_occlusion_patch(img, boxes, opts.occlusion_density, rng);
        }
        sink({name, std::move(img), projected.boxes, projected.warnings});
      };
      if (opts.plain) {
        emit(tone_map(rotated), stem);
      }
      if (opts.ahe) {
        emit(tone_map(ahe(rotated)), stem + "_ahe");
      }
    }
  }
}

}  // namespace aos
