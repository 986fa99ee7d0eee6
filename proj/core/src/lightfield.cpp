#include "aos/lightfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "aos/parallel.hpp"

namespace aos {
namespace {

// Bilinear lookup at a continuous coordinate (pixel centres at +0.5),
// clamping taps to the image.
inline double sample_bilinear(const HdrImage& img, double x, double y) {
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const float* r0 = img.samples.data() + img.index(0, y0);
  const float* r1 = img.samples.data() + img.index(0, y1);
  const double top = r0[x0] + ax * (static_cast<double>(r0[x1]) - r0[x0]);
  const double bottom = r1[x0] + ax * (static_cast<double>(r1[x1]) - r1[x0]);
  return top + ay * (bottom - top);
}

bool pose_less(const Pose& a, const Pose& b) {
  for (int i = 0; i < 3; ++i) {
    if (a.position[i] != b.position[i]) {
      return a.position[i] < b.position[i];
    }
  }
  for (int i = 0; i < 9; ++i) {
    if (a.rotation(i) != b.rotation(i)) {
      return a.rotation(i) < b.rotation(i);
    }
  }
  return false;
}

// Order views by pose, then by raw image bytes, so that summation order is a
// property of the capture contents rather than of the input order.
std::vector<std::size_t> canonical_order(const LightFieldCapture& capture) {
  std::vector<std::size_t> order(capture.views.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const View& a = capture.views[i];
    const View& b = capture.views[j];
    if (pose_less(a.pose, b.pose)) return true;
    if (pose_less(b.pose, a.pose)) return false;
    return std::memcmp(a.image.samples.data(), b.image.samples.data(),
                       a.image.size() * sizeof(float)) < 0;
  });
  return order;
}

Mat3 axis_rotation(int axis, double deg) {
  return Eigen::AngleAxisd(deg_to_rad(deg), Vec3::Unit(axis)).toRotationMatrix();
}

}  // namespace

double LightFieldCapture::aperture_size() const {
  if (views.empty()) {
    return 0.0;
  }
  Vec3 lo = views.front().pose.position;
  Vec3 hi = lo;
  for (const auto& v : views) {
    lo = lo.cwiseMin(v.pose.position);
    hi = hi.cwiseMax(v.pose.position);
  }
  return std::max(hi.x() - lo.x(), hi.y() - lo.y());
}

void LightFieldCapture::validate() const {
  if (views.empty()) {
    throw std::invalid_argument("capture: no views");
  }
  intrinsics.validate();
  for (const auto& v : views) {
    if (v.image.width != intrinsics.width || v.image.height != intrinsics.height) {
      throw std::invalid_argument("capture: view image size differs from intrinsics");
    }
  }
}

void FocalPlane::validate() const {
  if (!(std::abs(tilt_x_deg) < 45.0 && std::abs(tilt_y_deg) < 45.0)) {
    throw std::invalid_argument("focal plane: tilts must stay below 45 degrees");
  }
  if (!std::isfinite(altitude_offset)) {
    throw std::invalid_argument("focal plane: altitude offset is not finite");
  }
}

std::size_t IntegralImage::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(count_map.samples.begin(), count_map.samples.end(),
                    [](std::uint16_t c) { return c > 0; }));
}

Plane resolve_plane(const FocalPlane& plane, const VirtualCamera& cam) {
  plane.validate();
  const Vec3 axis = cam.pose.optical_axis();
  if (std::abs(axis.z()) < 1e-12) {
    throw std::invalid_argument("focal plane: virtual optical axis is horizontal");
  }
  const double t = (plane.altitude_offset - cam.pose.position.z()) / axis.z();
  if (!(t > 0.0)) {
    throw std::invalid_argument("focal plane: plane lies behind the virtual camera");
  }
  const Mat3 tilt = axis_rotation(0, plane.tilt_x_deg) * axis_rotation(1, plane.tilt_y_deg);
  Plane out;
  out.point = cam.pose.position + t * axis;
  out.normal = (cam.pose.rotation * tilt * Vec3::UnitZ()).normalized();
  return out;
}

IntegralImage integrate(const LightFieldCapture& capture, const FocalPlane& plane,
                        const VirtualCamera& cam, const IntegrateOptions& opts) {
  capture.validate();
  cam.intrinsics.validate();
  if (capture.views.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("integrate: too many views for the count map");
  }
  const Plane world_plane = resolve_plane(plane, cam);

  const Vec3 cv = cam.pose.position;
  const Vec3& n = world_plane.normal;
  const double s = n.dot(world_plane.point - cv);
  const Mat3 back = cam.pose.rotation * inverse_camera_matrix(cam.intrinsics);
  // n . direction(q) for homogeneous virtual pixel q; the plane point lies in
  // front of the virtual camera where s / (g . q) > 0.
  const Vec3 g = back.transpose() * n;

  // Plane-induced homography from virtual pixels to each view's pixels.
  const auto order = canonical_order(capture);
  std::vector<Mat3> homographies;
  homographies.reserve(order.size());
  const Mat3 k = camera_matrix(capture.intrinsics);
  for (std::size_t idx : order) {
    const Pose& p = capture.views[idx].pose;
    const Mat3 transfer = Mat3::Identity() + (cv - p.position) * n.transpose() / s;
    homographies.push_back(k * p.rotation.transpose() * transfer * back);
  }

  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  const double src_w = capture.intrinsics.width;
  const double src_h = capture.intrinsics.height;

  IntegralImage out;
  out.image = HdrImage(w, h, IntegralImage::kInvalidSample);
  out.count_map = CountMap(w, h, 0);
  out.virtual_pose = cam.pose;
  out.plane = plane;

  parallel_for(0, h, opts.threads, [&](int row_begin, int row_end) {
    const int rows = row_end - row_begin;
    std::vector<double> sum(static_cast<std::size_t>(rows) * w, 0.0);
    std::vector<std::uint16_t> count(sum.size(), 0);
    std::vector<unsigned char> in_front(sum.size(), 0);
    for (int y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < w; ++x) {
        const double nd = g.dot(Vec3(x + 0.5, y + 0.5, 1.0));
        in_front[static_cast<std::size_t>(y - row_begin) * w + x] = (s / nd) > 0.0 ? 1 : 0;
      }
    }
    for (std::size_t vi = 0; vi < order.size(); ++vi) {
      const HdrImage& src = capture.views[order[vi]].image;
      const Mat3& hm = homographies[vi];
      const Vec3 step = hm.col(0);
      for (int y = row_begin; y < row_end; ++y) {
        const std::size_t base = static_cast<std::size_t>(y - row_begin) * w;
        Vec3 q = hm * Vec3(0.5, y + 0.5, 1.0);
        for (int x = 0; x < w; ++x, q += step) {
          if (q.z() <= 0.0 || !in_front[base + x]) {
            continue;
          }
          const double u = q.x() / q.z();
          const double v = q.y() / q.z();
          if (!(u >= 0.0 && v >= 0.0 && u <= src_w && v <= src_h)) {
            continue;
          }
          sum[base + x] += sample_bilinear(src, u, v);
          ++count[base + x];
        }
      }
    }
    for (int y = row_begin; y < row_end; ++y) {
      const std::size_t base = static_cast<std::size_t>(y - row_begin) * w;
      for (int x = 0; x < w; ++x) {
        const auto c = count[base + x];
        out.count_map.at(x, y) = c;
        if (c > 0) {
          out.image.at(x, y) = static_cast<float>(sum[base + x] / c);
        }
      }
    }
  });
  return out;
}

VirtualCamera virtual_camera_at_center(const LightFieldCapture& capture, double up_angle_deg) {
  capture.validate();
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : capture.views) {
    centroid += v.pose.position;
  }
  centroid /= static_cast<double>(capture.views.size());
  return {Pose::nadir(centroid, up_angle_deg), capture.intrinsics};
}

std::vector<IntegralImage> focal_stack(const LightFieldCapture& capture,
                                       std::span<const FocalPlane> planes,
                                       const VirtualCamera& cam, const IntegrateOptions& opts) {
  std::vector<IntegralImage> stack;
  stack.reserve(planes.size());
  for (const auto& p : planes) {
    stack.push_back(integrate(capture, p, cam, opts));
  }
  return stack;
}

std::vector<HdrImage> normalize_means(std::vector<HdrImage> images) {
  if (images.empty()) {
    throw std::invalid_argument("normalize_means: empty image list");
  }
  std::vector<double> means;
  means.reserve(images.size());
  for (const auto& img : images) {
    means.push_back(mean(img));
  }
  const double target = std::accumulate(means.begin(), means.end(), 0.0) /
                        static_cast<double>(means.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double offset = target - means[i];
    for (float& v : images[i].samples) {
      v = static_cast<float>(v + offset);
    }
  }
  return images;
}

void normalize_means(std::span<View> views) {
  if (views.empty()) {
    throw std::invalid_argument("normalize_means: empty view list");
  }
  std::vector<HdrImage> images;
  images.reserve(views.size());
  for (auto& v : views) {
    images.push_back(std::move(v.image));
  }
  images = normalize_means(std::move(images));
  for (std::size_t i = 0; i < views.size(); ++i) {
    views[i].image = std::move(images[i]);
  }
}

double blur_footprint(double o, double a, double h) { return blur_footprint_sized(o, a, h, 0.0); }

double blur_footprint_sized(double o, double a, double h, double w) {
  if (!(o >= 0.0) || !(a >= 0.0) || !(w >= 0.0)) {
    throw std::invalid_argument("blur_footprint: o, a and w must be non-negative");
  }
  if (!(o < h)) {
    throw std::invalid_argument("blur_footprint: occluder altitude must be below the aperture");
  }
  return (o * a + w * h) / (h - o);
}

}  // namespace aos
