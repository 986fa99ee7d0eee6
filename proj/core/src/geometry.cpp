#include "aos/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aos {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("intrinsics: image size must be positive");
  }
  if (!(focal_length > 0.0) || !std::isfinite(focal_length)) {
    throw std::invalid_argument("intrinsics: focal_length must be positive");
  }
  if (!(principal_point.x() >= 0.0 && principal_point.x() <= width &&
        principal_point.y() >= 0.0 && principal_point.y() <= height)) {
    throw std::invalid_argument("intrinsics: principal point outside image");
  }
}

double CameraIntrinsics::fov_deg() const { return focal_to_fov_deg(focal_length, width); }

CameraIntrinsics fov_to_intrinsics(double fov_deg, int width, int height) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    throw std::invalid_argument("fov_to_intrinsics: fov must lie in (0, 180) degrees, got " +
                                std::to_string(fov_deg));
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("fov_to_intrinsics: image size must be positive");
  }
  CameraIntrinsics intr;
  intr.width = width;
  intr.height = height;
  intr.focal_length = (width / 2.0) / std::tan(deg_to_rad(fov_deg) / 2.0);
  intr.principal_point = Vec2(width / 2.0, height / 2.0);
  return intr;
}

double focal_to_fov_deg(double focal_length, int width) {
  return rad_to_deg(2.0 * std::atan((width / 2.0) / focal_length));
}

Pose Pose::look(const Vec3& position, const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  // Image y points down, i.e. against the up hint projected off the axis.
  Vec3 y = -(up - up.dot(z) * z);
  if (y.norm() < 1e-12) {
    throw std::invalid_argument("Pose::look: up vector parallel to forward");
  }
  y.normalize();
  const Vec3 x = y.cross(z);
  Pose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.position = position;
  return pose;
}

Pose Pose::nadir(const Vec3& position, double up_angle_deg) {
  const double a = deg_to_rad(up_angle_deg);
  const Vec3 up(-std::sin(a), std::cos(a), 0.0);
  return look(position, Vec3(0.0, 0.0, -1.0), up);
}

void Pose::validate() const {
  const Mat3 gram = rotation.transpose() * rotation;
  if (!gram.isApprox(Mat3::Identity(), 1e-9) ||
      std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("pose: rotation is not a proper orthonormal matrix");
  }
  if (!position.allFinite()) {
    throw std::invalid_argument("pose: position is not finite");
  }
}

Ray Ray::through(const Vec3& origin, const Vec3& target) {
  const Vec3 d = target - origin;
  if (d.norm() == 0.0) {
    throw std::invalid_argument("Ray::through: coincident points");
  }
  return {origin, d.normalized()};
}

double Plane::height_at(double x, double y) const {
  return point.z() - (normal.x() * (x - point.x()) + normal.y() * (y - point.y())) / normal.z();
}

Mat3 camera_matrix(const CameraIntrinsics& intr) {
  Mat3 k;
  k << intr.focal_length, 0.0, intr.principal_point.x(),  //
      0.0, intr.focal_length, intr.principal_point.y(),   //
      0.0, 0.0, 1.0;
  return k;
}

Mat3 inverse_camera_matrix(const CameraIntrinsics& intr) {
  const double f = intr.focal_length;
  Mat3 k;
  k << 1.0 / f, 0.0, -intr.principal_point.x() / f,  //
      0.0, 1.0 / f, -intr.principal_point.y() / f,   //
      0.0, 0.0, 1.0;
  return k;
}

std::optional<Projection> project_point(const CameraIntrinsics& intr, const Pose& pose,
                                        const Vec3& world_point) {
  const Vec3 cam = pose.rotation.transpose() * (world_point - pose.position);
  if (!(cam.z() > 0.0)) {
    return std::nullopt;
  }
  const double f = intr.focal_length;
  return Projection{Vec2(intr.principal_point.x() + f * cam.x() / cam.z(),
                         intr.principal_point.y() + f * cam.y() / cam.z()),
                    cam.z()};
}

Ray pixel_ray_unchecked(const CameraIntrinsics& intr, const Pose& pose, const Vec2& pixel) {
  const Vec3 cam((pixel.x() - intr.principal_point.x()) / intr.focal_length,
                 (pixel.y() - intr.principal_point.y()) / intr.focal_length, 1.0);
  return {pose.position, (pose.rotation * cam).normalized()};
}

Ray pixel_ray(const CameraIntrinsics& intr, const Pose& pose, const Vec2& pixel) {
  if (!intr.contains(pixel)) {
    throw std::invalid_argument("pixel_ray: pixel outside image bounds");
  }
  return pixel_ray_unchecked(intr, pose, pixel);
}

std::optional<Vec3> intersect_plane(const Ray& ray, const Plane& plane) {
  const double denom = ray.direction.dot(plane.normal);
  if (std::abs(denom) < 1e-12) {
    return std::nullopt;
  }
  const double t = (plane.point - ray.origin).dot(plane.normal) / denom;
  if (!(t > 0.0)) {
    return std::nullopt;
  }
  return ray.at(t);
}

}  // namespace aos
